#include "gcdro/cli/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace gcdro::cli {

std::string_view to_string(DataKind kind) {
    switch (kind) {
    case DataKind::table1: return "table1";
    case DataKind::blobs2d: return "blobs2d";
    case DataKind::seq_task: return "seq_task";
    case DataKind::csv: return "csv";
    }
    return "table1";
}

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
    throw Error(ErrorCode::Config, "\"" + key + "\": " + why);
}

DataKind data_kind_from_string(const std::string& key, const std::string& name) {
    for (auto k : {DataKind::table1, DataKind::blobs2d, DataKind::seq_task, DataKind::csv})
        if (to_string(k) == name) return k;
    config_error(key, "unknown data kind '" + name + "'");
}

std::string_view to_string(ImperfectProfile p) { return p == ImperfectProfile::text ? "text" : "image"; }

// One JSON object being read; every key must be consumed before finish().
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node.is_object()) config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const char* key) const { return node_.contains(key); }

    const json* take(const char* key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string key(const char* name) const { return path_.empty() ? name : path_ + "." + name; }

    bool read(const char* name, double& out) {
        const json* v = take(name);
        if (!v) return false;
        if (!v->is_number()) config_error(key(name), "expected a number");
        out = v->get<double>();
        return true;
    }

    template <class U>
        requires(std::is_unsigned_v<U> && !std::is_same_v<U, bool>)
    bool read(const char* name, U& out) {
        const json* v = take(name);
        if (!v) return false;
        if (!v->is_number_integer() || v->get<std::int64_t>() < 0)
            config_error(key(name), "expected a non-negative integer");
        out = v->get<U>();
        return true;
    }

    bool read(const char* name, int& out) {
        const json* v = take(name);
        if (!v) return false;
        if (!v->is_number_integer()) config_error(key(name), "expected an integer");
        out = v->get<int>();
        return true;
    }

    bool read(const char* name, bool& out) {
        const json* v = take(name);
        if (!v) return false;
        if (!v->is_boolean()) config_error(key(name), "expected true or false");
        out = v->get<bool>();
        return true;
    }

    bool read(const char* name, std::string& out) {
        const json* v = take(name);
        if (!v) return false;
        if (!v->is_string()) config_error(key(name), "expected a string");
        out = v->get<std::string>();
        return true;
    }

    template <std::size_t N, class T> bool read_array(const char* name, std::array<T, N>& out) {
        const json* v = take(name);
        if (!v) return false;
        if (!v->is_array() || v->size() != N)
            config_error(key(name), "expected an array of " + std::to_string(N) + " values");
        for (std::size_t i = 0; i < N; ++i) {
            const auto& e = (*v)[i];
            if constexpr (std::is_same_v<T, std::string>) {
                if (!e.is_string()) config_error(key(name), "expected strings");
            } else if constexpr (std::is_integral_v<T>) {
                if (!e.is_number_integer()) config_error(key(name), "expected integers");
            } else {
                if (!e.is_number()) config_error(key(name), "expected numbers");
            }
            out[i] = e.get<T>();
        }
        return true;
    }

    // Converts enum names, reporting bad values against the key.
    template <class Fn> bool read_enum(const char* name, Fn&& convert) {
        std::string s;
        if (!read(name, s)) return false;
        try {
            convert(s);
        } catch (const Error& e) {
            config_error(key(name), e.what());
        }
        return true;
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key())) config_error(key(it.key().c_str()), "unknown key");
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn> void checked(const std::string& section, Fn&& validate_fn) {
    try {
        validate_fn();
    } catch (const Error& e) {
        // Validators report "field: reason"; prefix the section path.
        std::string msg = e.what();
        const auto colon = msg.find(": ");
        if (colon != std::string::npos) msg = msg.substr(colon + 2); // strip the code name
        const auto field_end = msg.find(':');
        if (field_end != std::string::npos)
            config_error(section + "." + msg.substr(0, field_end), msg.substr(field_end + 2));
        config_error(section, msg);
    }
}

void parse_table1(Section& s, Table1Spec& spec) {
    s.read("n_per_group", spec.n_per_group);
    s.read("seed", spec.seed);
    s.read("feature_noise", spec.feature_noise);
    s.read("flip_fraction", spec.flip_fraction);
    s.finish();
    if (spec.n_per_group < 1) config_error(s.key("n_per_group"), "must be at least 1");
    if (!(spec.feature_noise >= 0.0)) config_error(s.key("feature_noise"), "must be non-negative");
    if (!(spec.flip_fraction >= 0.0 && spec.flip_fraction < 0.5))
        config_error(s.key("flip_fraction"), "must lie in [0, 0.5)");
    checked("data", [&] { validate(spec); });
}

void parse_blobs(Section& s, Blobs2DSpec& spec) {
    s.read("majority_per_subclass", spec.majority_per_subclass);
    s.read("minority_per_subclass", spec.minority_per_subclass);
    if (const json* means = s.take("means")) {
        if (!means->is_array() || means->size() != 4) config_error(s.key("means"), "expected four [x, y] pairs");
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& p = (*means)[i];
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                config_error(s.key("means"), "expected four [x, y] pairs");
            spec.subclass_means[i] = {p[0].get<double>(), p[1].get<double>()};
        }
    }
    s.read_array("cov", spec.subclass_cov);
    s.read("seed", spec.seed);
    s.finish();
    checked("data", [&] { validate(spec); });
}

void parse_seq(Section& s, SeqTaskSpec& spec) {
    if (const json* v = s.take("setting")) {
        if (*v == 1 || *v == "setting1")
            spec.setting = SeqSetting::setting1;
        else if (*v == 2 || *v == "setting2")
            spec.setting = SeqSetting::setting2;
        else
            config_error(s.key("setting"), "expected 1 or 2");
    }
    s.read("n_samples", spec.n_samples);
    s.read("n_test", spec.n_test);
    s.read_array("m_range", spec.m_range);
    s.read_array("chunk_len_range", spec.chunk_len_range);
    s.read("alphabet_size", spec.alphabet_size);
    s.read_array("int_range", spec.int_range);
    s.read_array("special_segment", spec.special_segment);
    s.read("seed", spec.seed);
    s.read("retry_cap", spec.retry_cap);
    s.finish();
    checked("data", [&] { validate(spec); });
}

void parse_csv(Section& s, CsvData& csv) {
    s.read("train", csv.train);
    s.read("valid", csv.valid);
    s.read("test", csv.test);
    s.read("num_classes", csv.num_classes);
    s.finish();
    if (csv.train.empty()) config_error(s.key("train"), "path required");
    if (csv.valid.empty()) config_error(s.key("valid"), "path required");
    if (csv.test.empty()) config_error(s.key("test"), "path required");
    if (csv.num_classes < 2) config_error(s.key("num_classes"), "must be at least 2");
}

DataConfig parse_data(const json& node) {
    DataConfig data;
    if (node.is_string()) {
        data.kind = data_kind_from_string("data", node.get<std::string>());
        if (data.kind == DataKind::csv) config_error("data", "csv data needs train/valid/test paths");
        return data;
    }
    Section s(node, "data");
    std::string kind;
    if (!s.read("kind", kind)) config_error("data.kind", "required");
    data.kind = data_kind_from_string("data.kind", kind);
    switch (data.kind) {
    case DataKind::table1: parse_table1(s, data.table1); break;
    case DataKind::blobs2d: parse_blobs(s, data.blobs2d); break;
    case DataKind::seq_task: parse_seq(s, data.seq_task); break;
    case DataKind::csv: parse_csv(s, data.csv); break;
    }
    return data;
}

PartitionSpec parse_partition_spec(const json& node, const std::string& path) {
    PartitionSpec spec;
    if (node.is_string()) {
        try {
            spec.kind = partition_kind_from_string(node.get<std::string>());
        } catch (const Error& e) {
            config_error(path, e.what());
        }
        if (spec.kind == PartitionKind::merged) config_error(path, "merged partition needs a merge_map");
        return spec;
    }
    Section s(node, path);
    s.read_enum("kind", [&](const std::string& v) { spec.kind = partition_kind_from_string(v); });
    if (const json* mm = s.take("merge_map")) {
        if (!mm->is_array()) config_error(s.key("merge_map"), "expected a list of {attribute, label, group}");
        for (const auto& entry : *mm) {
            Section e(entry, s.key("merge_map"));
            Cell cell;
            int group = -1;
            if (!e.read("attribute", cell.attribute) || !e.read("label", cell.label) || !e.read("group", group))
                config_error(s.key("merge_map"), "each entry needs attribute, label and group");
            e.finish();
            if (!spec.merge_map.emplace(cell, group).second)
                config_error(s.key("merge_map"), "cell " + cell_name(cell) + " listed twice");
        }
    }
    s.read("k", spec.k);
    s.read("iters", spec.iters);
    s.read("seed", spec.seed);
    s.finish();
    if (spec.kind == PartitionKind::merged && spec.merge_map.empty())
        config_error(s.key("merge_map"), "required for a merged partition");
    if (spec.k < 1) config_error(s.key("k"), "must be at least 1");
    if (spec.iters < 1) config_error(s.key("iters"), "must be at least 1");
    return spec;
}

void parse_train(Section& s, TrainConfig& c, bool& alpha_set, bool& beta_set) {
    s.read_enum("method", [&](const std::string& v) { c.method = method_from_string(v); });
    alpha_set = s.read("alpha", c.alpha);
    beta_set = s.read("beta", c.beta);
    s.read("gamma_group_loss", c.gamma_group_loss);
    s.read("gamma_cond_loss", c.gamma_cond_loss);
    s.read("gamma_prior", c.gamma_prior);
    s.read("eta", c.eta);
    s.read("eta_q", c.eta_q);
    s.read("epochs", c.epochs);
    s.read("batch_size", c.batch_size);
    s.read("seed", c.seed);
    s.read_enum("inner_update", [&](const std::string& v) { c.inner_update = inner_update_from_string(v); });
    s.read("eval_merge_threshold", c.eval_merge_threshold);
    s.read_enum("arch", [&](const std::string& v) { c.arch = arch_from_string(v); });
    s.read("hidden_dim", c.hidden_dim);
    s.read_enum("lr_schedule", [&](const std::string& v) { c.lr_schedule = lr_schedule_from_string(v); });
    s.read("record_trajectory", c.record_trajectory);
    s.finish();
}

json partition_json(const PartitionSpec& p) {
    json out;
    out["kind"] = std::string(to_string(p.kind));
    if (p.kind == PartitionKind::merged) {
        json mm = json::array();
        for (const auto& [cell, group] : p.merge_map)
            mm.push_back({{"attribute", cell.attribute}, {"label", cell.label}, {"group", group}});
        out["merge_map"] = mm;
    }
    if (p.kind == PartitionKind::kmeans) {
        out["k"] = p.k;
        out["iters"] = p.iters;
        out["seed"] = p.seed;
    }
    return out;
}

json data_json(const DataConfig& d) {
    json out;
    out["kind"] = std::string(to_string(d.kind));
    switch (d.kind) {
    case DataKind::table1:
        out["n_per_group"] = d.table1.n_per_group;
        out["seed"] = d.table1.seed;
        out["feature_noise"] = d.table1.feature_noise;
        out["flip_fraction"] = d.table1.flip_fraction;
        break;
    case DataKind::blobs2d: {
        out["majority_per_subclass"] = d.blobs2d.majority_per_subclass;
        out["minority_per_subclass"] = d.blobs2d.minority_per_subclass;
        json means = json::array();
        for (const auto& m : d.blobs2d.subclass_means) means.push_back({m[0], m[1]});
        out["means"] = means;
        out["cov"] = d.blobs2d.subclass_cov;
        out["seed"] = d.blobs2d.seed;
        break;
    }
    case DataKind::seq_task:
        out["setting"] = d.seq_task.setting == SeqSetting::setting1 ? 1 : 2;
        out["n_samples"] = d.seq_task.n_samples;
        out["n_test"] = d.seq_task.n_test;
        out["m_range"] = d.seq_task.m_range;
        out["chunk_len_range"] = d.seq_task.chunk_len_range;
        out["alphabet_size"] = d.seq_task.alphabet_size;
        out["int_range"] = d.seq_task.int_range;
        out["special_segment"] = d.seq_task.special_segment;
        out["seed"] = d.seq_task.seed;
        out["retry_cap"] = d.seq_task.retry_cap;
        break;
    case DataKind::csv:
        out["train"] = d.csv.train;
        out["valid"] = d.csv.valid;
        out["test"] = d.csv.test;
        out["num_classes"] = d.csv.num_classes;
        break;
    }
    return out;
}

json train_json(const TrainConfig& c) {
    json out;
    out["method"] = std::string(to_string(c.method));
    out["alpha"] = c.alpha;
    out["beta"] = c.beta;
    out["gamma_group_loss"] = c.gamma_group_loss;
    out["gamma_cond_loss"] = c.gamma_cond_loss;
    out["gamma_prior"] = c.gamma_prior;
    out["eta"] = c.eta;
    out["eta_q"] = c.eta_q;
    out["epochs"] = c.epochs;
    out["batch_size"] = c.batch_size;
    out["seed"] = c.seed;
    out["inner_update"] = std::string(to_string(c.inner_update));
    out["eval_merge_threshold"] = c.eval_merge_threshold;
    out["arch"] = std::string(to_string(c.arch));
    out["hidden_dim"] = c.hidden_dim;
    out["lr_schedule"] = std::string(to_string(c.lr_schedule));
    out["record_trajectory"] = c.record_trajectory;
    return out;
}

} // namespace

ExperimentConfig parse_config_json(const json& doc) {
    ExperimentConfig config;
    Section root(doc, "");

    const json* data = root.take("data");
    if (!data) config_error("data", "required");
    config.data = parse_data(*data);

    if (const json* part = root.take("partition")) {
        if (part->is_string()) {
            config.train_partition = parse_partition_spec(*part, "partition");
        } else {
            Section s(*part, "partition");
            if (const json* t = s.take("train")) config.train_partition = parse_partition_spec(*t, "partition.train");
            if (const json* e = s.take("eval")) config.eval_partition = parse_partition_spec(*e, "partition.eval");
            s.finish();
        }
    }
    if (config.eval_partition.kind != PartitionKind::clean)
        config_error("partition.eval", "evaluation always uses the clean partition");

    root.read_enum("imperfect_profile", [&](const std::string& v) {
        if (v == "text")
            config.imperfect_profile = ImperfectProfile::text;
        else if (v == "image")
            config.imperfect_profile = ImperfectProfile::image;
        else
            throw Error(ErrorCode::InvalidArguments, "expected \"text\" or \"image\"");
    });

    bool alpha_set = false, beta_set = false;
    if (const json* t = root.take("train")) {
        Section s(*t, "train");
        parse_train(s, config.train, alpha_set, beta_set);
    }
    if (const json* m = root.take("method")) {
        if (doc.contains("train") && doc["train"].contains("method"))
            config_error("method", "given both at top level and in train");
        if (!m->is_string()) config_error("method", "expected a string");
        try {
            config.train.method = method_from_string(m->get<std::string>());
        } catch (const Error& e) {
            config_error("method", e.what());
        }
    }
    if (config.train_partition.kind != PartitionKind::clean) {
        const bool image = config.imperfect_profile == ImperfectProfile::image;
        if (!alpha_set) config.train.alpha = image ? 0.2 : 0.5;
        if (!beta_set) config.train.beta = image ? 0.1 : 0.2;
    }
    checked("train", [&] { validate(config.train); });

    config.sweep.methods = {config.train.method};
    if (const json* sw = root.take("sweep")) {
        Section s(*sw, "sweep");
        if (const json* seeds = s.take("seeds")) {
            if (!seeds->is_array() || seeds->empty()) config_error("sweep.seeds", "expected a non-empty list");
            config.sweep.seeds.clear();
            std::set<std::uint64_t> distinct;
            for (const auto& v : *seeds) {
                if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                    config_error("sweep.seeds", "expected non-negative integers");
                const auto seed = v.get<std::uint64_t>();
                if (!distinct.insert(seed).second) config_error("sweep.seeds", "seed " + std::to_string(seed) + " repeated");
                config.sweep.seeds.push_back(seed);
            }
        }
        if (const json* methods = s.take("methods")) {
            if (!methods->is_array() || methods->empty()) config_error("sweep.methods", "expected a non-empty list");
            config.sweep.methods.clear();
            for (const auto& v : *methods) {
                if (!v.is_string()) config_error("sweep.methods", "expected method names");
                try {
                    const Method m = method_from_string(v.get<std::string>());
                    if (std::find(config.sweep.methods.begin(), config.sweep.methods.end(), m) !=
                        config.sweep.methods.end())
                        config_error("sweep.methods", "method " + v.get<std::string>() + " repeated");
                    config.sweep.methods.push_back(m);
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::Config) throw;
                    config_error("sweep.methods", e.what());
                }
            }
        }
        s.read("workers", config.sweep.workers);
        s.finish();
        if (config.sweep.workers < 1) config_error("sweep.workers", "must be at least 1");
    }

    root.read("output_dir", config.output_dir);
    if (config.output_dir.empty()) config_error("output_dir", "must not be empty");
    root.finish();

    if (config.data.kind == DataKind::csv && config.train_partition.kind == PartitionKind::generator)
        config_error("partition.train", "csv data has no generator partition");
    return config;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, "'" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config_json(doc);
}

json to_json(const ExperimentConfig& c) {
    json out = run_config_json(c);
    json methods = json::array();
    for (Method m : c.sweep.methods) methods.push_back(std::string(to_string(m)));
    out["sweep"] = {{"seeds", c.sweep.seeds}, {"methods", methods}, {"workers", c.sweep.workers}};
    return out;
}

json run_config_json(const ExperimentConfig& c) {
    json out;
    out["data"] = data_json(c.data);
    out["partition"] = {{"train", partition_json(c.train_partition)}, {"eval", partition_json(c.eval_partition)}};
    out["imperfect_profile"] = std::string(to_string(c.imperfect_profile));
    out["train"] = train_json(c.train);
    out["output_dir"] = c.output_dir;
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    json doc = run_config_json(config);
    doc["train"].erase("seed");
    doc.erase("output_dir");
    const std::string text = doc.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string output_root(const ExperimentConfig& config) {
    std::filesystem::path dir(config.output_dir);
    if (const char* env = std::getenv(kOutputRootEnv); env && *env && dir.is_relative())
        dir = std::filesystem::path(env) / dir;
    return dir.string();
}

} // namespace gcdro::cli
