#include "gcdro/cli/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gcdro::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

json to_json(const GroupLayout& layout) { return {{"sizes", layout.sizes()}, {"total", layout.total()}}; }

json to_json(const Partition& partition) {
    json cells = json::array();
    for (const auto& c : partition.cells) cells.push_back(cell_name(c));
    return {{"layout", to_json(partition.layout)}, {"cells", cells}, {"assignment", partition.assignment}};
}

json to_json(const GroupMetrics& m) {
    return {{"accuracy", m.accuracy}, {"counts", m.counts},   {"correct", m.correct},
            {"robust", m.robust},     {"average", m.average}, {"pooled_groups", m.pooled_groups}};
}

json to_json(const EpochSummary& e) {
    return {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"inner_update", e.inner_update}, {"valid", to_json(e.valid)}};
}

json checkpoint_json(const ModelParams& p, int epoch) {
    const auto v = p.values();
    return {{"epoch", epoch},
            {"arch", std::string(to_string(p.arch()))},
            {"input_dim", p.input_dim()},
            {"hidden_dim", p.hidden_dim()},
            {"num_classes", p.num_classes()},
            {"values", std::vector<double>(v.begin(), v.end())}};
}

ModelParams params_from_json(const json& doc) {
    try {
        ModelParams p(arch_from_string(doc.at("arch").get<std::string>()), doc.at("input_dim").get<std::size_t>(),
                      doc.at("hidden_dim").get<std::size_t>(), doc.at("num_classes").get<std::size_t>());
        const auto values = doc.at("values").get<std::vector<double>>();
        if (values.size() != p.size()) throw Error(ErrorCode::ShapeError, "checkpoint value count mismatch");
        std::copy(values.begin(), values.end(), p.values().begin());
        return p;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("malformed checkpoint: ") + e.what());
    }
}

std::string run_record_jsonl(const RunRecord& record) {
    std::string out;
    for (const auto& e : record.epochs) {
        json line = to_json(e);
        line["method"] = std::string(to_string(record.method));
        line["seed"] = record.seed;
        line["config_hash"] = record.config_hash;
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::string q_trajectory_csv(const RunRecord& record) {
    std::ostringstream out;
    if (record.q_snapshots.empty()) return "step\n";
    const std::size_t m = record.q_snapshots.front().q.size();
    out << "step";
    for (std::size_t g = 0; g < m; ++g) out << ",q" << g;
    for (std::size_t g = 0; g < m; ++g) out << ",prior" << g;
    out << '\n';
    for (const auto& s : record.q_snapshots) {
        out << s.step;
        for (double v : s.q) out << ',' << fmt(v);
        for (double v : s.prior) out << ',' << fmt(v);
        out << '\n';
    }
    return out.str();
}

std::string cond_ratio_csv(const RunRecord& record) {
    std::ostringstream out;
    out << "epoch,step,id,cond_ratio\n";
    for (const auto& s : record.cond_snapshots)
        for (std::size_t id = 0; id < s.cond_ratio.size(); ++id)
            out << s.epoch << ',' << s.step << ',' << id << ',' << fmt(s.cond_ratio[id]) << '\n';
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + p.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Io, path + " is not valid JSON: " + e.what());
    }
}

} // namespace gcdro::cli
