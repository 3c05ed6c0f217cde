#include "gcdro/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gcdro/cli/serialize.hpp"
#include "gcdro/datagen.hpp"

namespace fs = std::filesystem;

namespace gcdro::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

Dataset with_clean_groups(Dataset ds) {
    const Partition clean = clean_partition(ds);
    return with_groups(ds, clean.assignment);
}

struct SplitData {
    std::optional<GeneratedData> generated[3];
    Dataset datasets[3];
};

SplitData load_splits(const ExperimentConfig& config) {
    SplitData out;
    const Split splits[3] = {Split::train, Split::valid, Split::test};
    switch (config.data.kind) {
    case DataKind::table1:
        for (int i = 0; i < 3; ++i) out.generated[i] = gen_table1(config.data.table1, splits[i]);
        break;
    case DataKind::blobs2d:
        for (int i = 0; i < 3; ++i) out.generated[i] = gen_blobs2d(config.data.blobs2d, splits[i]);
        break;
    case DataKind::csv: {
        const std::string* paths[3] = {&config.data.csv.train, &config.data.csv.valid, &config.data.csv.test};
        for (int i = 0; i < 3; ++i)
            out.datasets[i] = load_dataset_csv(*paths[i], config.data.csv.num_classes, splits[i]);
        return out;
    }
    case DataKind::seq_task:
        throw Error(ErrorCode::Config, "\"data.kind\": seq_task data supports the generate command only");
    }
    for (int i = 0; i < 3; ++i) out.datasets[i] = out.generated[i]->dataset;
    return out;
}

// FNV-1a over file bytes, for the manifest.
std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json heatmap_json(const Heatmap& h) {
    return {{"columns", h.columns}, {"epochs", h.epochs}, {"summary", h.summary}};
}

json result_json(const RunResult& r) {
    return {{"method", std::string(to_string(r.method))},
            {"seed", r.seed},
            {"config_hash", r.config_hash},
            {"best_epoch", r.best_epoch},
            {"steps", r.record.steps},
            {"max_group_ratio", r.record.max_group_ratio},
            {"valid", to_json(r.best_valid)},
            {"test", to_json(r.test)},
            {"heatmap", heatmap_json(r.heatmap)}};
}

} // namespace

ExperimentData prepare_data(const ExperimentConfig& config) {
    SplitData splits = load_splits(config);
    ExperimentData data;
    Dataset& train = splits.datasets[0];
    data.train_clean = clean_partition(train);

    Partition train_partition;
    switch (config.train_partition.kind) {
    case PartitionKind::clean: train_partition = data.train_clean; break;
    case PartitionKind::generator:
        if (!splits.generated[0]) throw Error(ErrorCode::Config, "\"partition.train\": data has no generator partition");
        train_partition = splits.generated[0]->imperfect;
        break;
    case PartitionKind::merged:
    case PartitionKind::kmeans: train_partition = make_partition(train, config.train_partition); break;
    }
    data.train = with_groups(train, train_partition.assignment);
    data.train_layout = train_partition.layout;
    data.valid = with_clean_groups(std::move(splits.datasets[1]));
    data.test = with_clean_groups(std::move(splits.datasets[2]));
    return data;
}

RunResult run_one(const ExperimentConfig& base, const ExperimentData& data, Method method, std::uint64_t seed,
                  const std::string& root) {
    ExperimentConfig config = base;
    config.train.method = method;
    config.train.seed = seed;

    RunResult result;
    result.method = method;
    result.seed = seed;
    result.config_hash = config_hash(config);
    if (!root.empty()) result.dir = (fs::path(root) / result.config_hash / std::to_string(seed)).string();
    if (!result.dir.empty())
        write_text_file((fs::path(result.dir) / "config.json").string(), run_config_json(config).dump(2) + "\n");

    try {
        result.record = train(data.train, data.train_layout, data.valid, config.train);
    } catch (const Error& e) {
        if (!result.dir.empty() && e.code() == ErrorCode::Diverged)
            write_text_file((fs::path(result.dir) / "failure.json").string(),
                            json{{"error", e.what()}}.dump(2) + "\n");
        throw;
    }
    result.record.config_hash = result.config_hash;
    result.best_epoch = select_model(result.record);
    result.best_valid = result.record.epochs[static_cast<std::size_t>(result.best_epoch - 1)].valid;
    const ModelParams& best = best_checkpoint(result.record);
    result.test = evaluate_groups(predict(best, data.test), data.test, GroupLayout::from_dataset(data.test),
                                  config.train.eval_merge_threshold);
    result.heatmap = weight_heatmap(result.record, data.train_clean);

    if (!result.dir.empty()) {
        const fs::path dir(result.dir);
        write_text_file((dir / "record.jsonl").string(), run_record_jsonl(result.record));
        for (std::size_t k = 0; k < result.record.checkpoints.size(); ++k)
            write_text_file((dir / ("epoch" + std::to_string(k + 1) + ".json")).string(),
                            checkpoint_json(result.record.checkpoints[k], static_cast<int>(k + 1)).dump() + "\n");
        if (!result.record.q_snapshots.empty())
            write_text_file((dir / "q_trajectory.csv").string(), q_trajectory_csv(result.record));
        if (!result.record.cond_snapshots.empty())
            write_text_file((dir / "cond_ratio.csv").string(), cond_ratio_csv(result.record));
        write_text_file((dir / "heatmap.csv").string(), heatmap_csv(result.heatmap));
        write_text_file((dir / "result.json").string(), result_json(result).dump(2) + "\n");
    }
    return result;
}

Stats mean_std(std::span<const double> values) {
    Stats s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

namespace {

struct RunMetrics {
    std::string config_hash, method;
    double test_robust, test_average, valid_robust, valid_average;
};

std::vector<SummaryRow> summarize_metrics(const std::vector<RunMetrics>& runs) {
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<const RunMetrics*>> groups;
    for (const auto& r : runs) {
        auto key = std::make_pair(r.config_hash, r.method);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<SummaryRow> rows;
    for (const auto& key : order) {
        const auto& members = groups[key];
        auto stat = [&](double RunMetrics::*field) {
            std::vector<double> v;
            for (const auto* m : members) v.push_back(m->*field);
            return mean_std(v);
        };
        SummaryRow row;
        row.config_hash = key.first;
        row.method = key.second;
        row.runs = members.size();
        row.test_robust = stat(&RunMetrics::test_robust);
        row.test_average = stat(&RunMetrics::test_average);
        row.valid_robust = stat(&RunMetrics::valid_robust);
        row.valid_average = stat(&RunMetrics::valid_average);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
    std::vector<RunMetrics> metrics;
    for (const auto& r : runs)
        metrics.push_back({r.config_hash, std::string(to_string(r.method)), r.test.robust, r.test.average,
                           r.best_valid.robust, r.best_valid.average});
    return summarize_metrics(metrics);
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << "config_hash,method,runs,test_robust_mean,test_robust_std,test_average_mean,test_average_std,"
           "valid_robust_mean,valid_robust_std,valid_average_mean,valid_average_std\n";
    for (const auto& r : rows)
        out << r.config_hash << ',' << r.method << ',' << r.runs << ',' << fmt(r.test_robust.mean) << ','
            << fmt(r.test_robust.std) << ',' << fmt(r.test_average.mean) << ',' << fmt(r.test_average.std) << ','
            << fmt(r.valid_robust.mean) << ',' << fmt(r.valid_robust.std) << ',' << fmt(r.valid_average.mean)
            << ',' << fmt(r.valid_average.std) << '\n';
    return out.str();
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-12s %4s  %-18s %-18s\n", "config", "method", "runs", "robust acc (%)",
                  "average acc (%)");
    out << line;
    for (const auto& r : rows) {
        const std::string robust = pct(r.test_robust.mean) + " ± " + pct(r.test_robust.std);
        const std::string average = pct(r.test_average.mean) + " ± " + pct(r.test_average.std);
        std::snprintf(line, sizeof line, "%-16s %-12s %4zu  %-18s %-18s\n", r.config_hash.c_str(), r.method.c_str(),
                      r.runs, robust.c_str(), average.c_str());
        out << line;
    }
    return out.str();
}

std::vector<std::string> generate(const ExperimentConfig& config, const std::string& root) {
    const fs::path dir = fs::path(root) / "data";
    std::vector<std::pair<std::string, std::string>> files; // name, content

    if (config.data.kind == DataKind::seq_task) {
        const SeqTaskData data = gen_seq_task(config.data.seq_task);
        const std::pair<const char*, const std::vector<SeqSample>*> parts[3] = {
            {"train.tsv", &data.train}, {"test_in.tsv", &data.test_in}, {"test_out.tsv", &data.test_out}};
        for (const auto& [name, samples] : parts) {
            std::string body;
            for (const auto& s : *samples) body += format_seq_line(s, config.data.seq_task.setting) + "\n";
            files.emplace_back(name, std::move(body));
        }
    } else {
        SplitData splits = load_splits(config);
        const char* names[3] = {"train", "valid", "test"};
        json partitions;
        for (int i = 0; i < 3; ++i) {
            Dataset ds = with_clean_groups(splits.datasets[i]);
            std::ostringstream csv;
            write_dataset_csv(csv, ds);
            files.emplace_back(std::string(names[i]) + ".csv", csv.str());
            json entry;
            entry["clean"] = to_json(clean_partition(ds));
            if (splits.generated[i]) entry["imperfect"] = to_json(splits.generated[i]->imperfect);
            partitions[names[i]] = entry;
        }
        if (config.train_partition.kind == PartitionKind::merged || config.train_partition.kind == PartitionKind::kmeans)
            partitions["train"]["training"] = to_json(make_partition(splits.datasets[0], config.train_partition));
        files.emplace_back("partitions.json", partitions.dump(2) + "\n");
    }

    json manifest;
    manifest["config"] = to_json(config);
    manifest["files"] = json::array();
    for (const auto& [name, body] : files)
        manifest["files"].push_back({{"name", name}, {"bytes", body.size()}, {"fnv1a64", content_digest(body)}});
    files.emplace_back("manifest.json", manifest.dump(2) + "\n");

    std::vector<std::string> written;
    for (const auto& [name, body] : files) {
        const std::string path = (dir / name).string();
        write_text_file(path, body);
        written.push_back(path);
    }
    return written;
}

std::vector<RunResult> sweep(const ExperimentConfig& config, std::ostream& log) {
    const ExperimentData data = prepare_data(config);
    const std::string root = output_root(config);

    struct Cell {
        Method method;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (Method m : config.sweep.methods)
        for (std::uint64_t s : config.sweep.seeds) cells.push_back({m, s});

    std::vector<std::optional<RunResult>> results(cells.size());
    std::vector<std::string> failures(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_one(config, data, cells[i].method, cells[i].seed, root);
                std::lock_guard lock(log_mutex);
                log << to_string(cells[i].method) << " seed " << cells[i].seed << ": robust "
                    << pct(results[i]->test.robust) << "% average " << pct(results[i]->test.average) << "%\n";
            } catch (const Error& e) {
                failures[i] = e.what();
                std::lock_guard lock(log_mutex);
                log << to_string(cells[i].method) << " seed " << cells[i].seed << ": failed: " << e.what() << "\n";
            }
        }
    };
    const std::size_t workers = std::min(config.sweep.workers, cells.size());
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::vector<RunResult> done;
    for (auto& r : results)
        if (r) done.push_back(std::move(*r));
    const auto rows = summarize(done);
    json summary = json::array();
    for (const auto& r : rows)
        summary.push_back({{"config_hash", r.config_hash},
                           {"method", r.method},
                           {"runs", r.runs},
                           {"test_robust", {{"mean", r.test_robust.mean}, {"std", r.test_robust.std}}},
                           {"test_average", {{"mean", r.test_average.mean}, {"std", r.test_average.std}}},
                           {"valid_robust", {{"mean", r.valid_robust.mean}, {"std", r.valid_robust.std}}},
                           {"valid_average", {{"mean", r.valid_average.mean}, {"std", r.valid_average.std}}}});
    write_text_file((fs::path(root) / "summary.json").string(), summary.dump(2) + "\n");
    write_text_file((fs::path(root) / "summary.csv").string(), summary_csv(rows));

    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!failures[i].empty())
            throw Error(ErrorCode::Diverged, std::string(to_string(cells[i].method)) + " seed " +
                                                 std::to_string(cells[i].seed) + ": " + failures[i]);
    return done;
}

std::vector<SummaryRow> report(const std::string& dir, std::ostream& out) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "no runs found: " + dir + " is not a directory");
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() == "result.json") found.push_back(entry.path());
    if (found.empty()) throw Error(ErrorCode::Io, "no runs found in " + dir);
    std::sort(found.begin(), found.end());

    std::vector<RunMetrics> metrics;
    std::ostringstream runs_csv, heat_csv;
    runs_csv << "config_hash,method,seed,best_epoch,test_robust,test_average,valid_robust,valid_average\n";
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::size_t>> heat_sum;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> heat_cols;
    std::vector<std::pair<std::string, std::string>> heat_order;
    for (const auto& path : found) {
        const json r = read_json_file(path.string());
        try {
            RunMetrics m{r.at("config_hash").get<std::string>(), r.at("method").get<std::string>(),
                         r.at("test").at("robust").get<double>(), r.at("test").at("average").get<double>(),
                         r.at("valid").at("robust").get<double>(), r.at("valid").at("average").get<double>()};
            runs_csv << m.config_hash << ',' << m.method << ',' << r.at("seed").get<std::uint64_t>() << ','
                     << r.at("best_epoch").get<int>() << ',' << fmt(m.test_robust) << ',' << fmt(m.test_average)
                     << ',' << fmt(m.valid_robust) << ',' << fmt(m.valid_average) << '\n';
            const auto key = std::make_pair(m.config_hash, m.method);
            const auto summary = r.at("heatmap").at("summary").get<std::vector<double>>();
            auto& acc = heat_sum[key];
            if (acc.second == 0) {
                heat_order.push_back(key);
                heat_cols[key] = r.at("heatmap").at("columns").get<std::vector<std::string>>();
                acc.first.assign(summary.size(), 0.0);
            }
            for (std::size_t c = 0; c < summary.size() && c < acc.first.size(); ++c) acc.first[c] += summary[c];
            ++acc.second;
            metrics.push_back(std::move(m));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Io, "malformed " + path.string() + ": " + e.what());
        }
    }

    // Mean over seeds of each run's all-epoch weight summary.
    for (const auto& key : heat_order) {
        heat_csv << "config_hash,method";
        for (const auto& c : heat_cols[key]) heat_csv << ',' << c;
        heat_csv << '\n' << key.first << ',' << key.second;
        const auto& [sum, count] = heat_sum[key];
        for (double v : sum) heat_csv << ',' << fmt(v / static_cast<double>(count));
        heat_csv << '\n';
    }

    const auto rows = summarize_metrics(metrics);
    write_text_file((fs::path(dir) / "report_runs.csv").string(), runs_csv.str());
    write_text_file((fs::path(dir) / "report_summary.csv").string(), summary_csv(rows));
    write_text_file((fs::path(dir) / "report_heatmaps.csv").string(), heat_csv.str());
    out << summary_table(rows);
    return rows;
}

int exit_code_for(const Error& error) {
    switch (error.code()) {
    case ErrorCode::Config: return 2;
    case ErrorCode::Io: return 4;
    default: return 3;
    }
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Group DRO and group-conditional DRO experiments on synthetic data", "gcdro"};
    app.require_subcommand(1);
    std::string config_path, report_dir;
    auto* gen = app.add_subcommand("generate", "Write train/valid/test data and a manifest");
    gen->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* trn = app.add_subcommand("train", "Run train.method with train.seed");
    trn->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* swp = app.add_subcommand("sweep", "Run every sweep method over every sweep seed");
    swp->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* rep = app.add_subcommand("report", "Collect run results below a directory");
    rep->add_option("dir", report_dir, "Directory holding run outputs")->required();

    // CLI11 consumes a reversed argument list without the program name.
    std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(reversed.begin(), reversed.end());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (rep->parsed()) {
            report(report_dir, out);
            return 0;
        }
        const ExperimentConfig config = parse_config(config_path);
        const std::string root = output_root(config);
        if (gen->parsed()) {
            for (const auto& path : generate(config, root)) out << path << "\n";
        } else if (trn->parsed()) {
            const ExperimentData data = prepare_data(config);
            const RunResult r = run_one(config, data, config.train.method, config.train.seed, root);
            out << to_string(r.method) << " seed " << r.seed << " best epoch " << r.best_epoch << ": test robust "
                << pct(r.test.robust) << "% average " << pct(r.test.average) << "%\n"
                << r.dir << "\n";
        } else if (swp->parsed()) {
            const auto runs = sweep(config, err);
            out << summary_table(summarize(runs));
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace gcdro::cli
