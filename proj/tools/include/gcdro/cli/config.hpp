#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcdro/datagen.hpp"
#include "gcdro/partition.hpp"
#include "gcdro/trainer.hpp"

namespace gcdro::cli {

using json = nlohmann::ordered_json;

enum class DataKind { table1, blobs2d, seq_task, csv };

std::string_view to_string(DataKind kind);

struct CsvData {
    std::string train, valid, test;
    int num_classes = 2;
};

struct DataConfig {
    DataKind kind = DataKind::table1;
    Table1Spec table1;
    Blobs2DSpec blobs2d;
    SeqTaskSpec seq_task;
    CsvData csv;
};

struct SweepConfig {
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<Method> methods; // defaults to {train.method}
    std::size_t workers = 1;
};

// Which hyperparameter defaults apply when the training partition is not
// clean: "text" (alpha 0.5, beta 0.2) or "image" (alpha 0.2, beta 0.1).
enum class ImperfectProfile { text, image };

struct ExperimentConfig {
    DataConfig data;
    PartitionSpec train_partition;
    PartitionSpec eval_partition; // always clean
    ImperfectProfile imperfect_profile = ImperfectProfile::text;
    TrainConfig train;
    SweepConfig sweep;
    std::string output_dir = "runs";
};

/// Reads and validates a JSON config, filling defaults. Unknown keys and
/// out-of-range values raise Error(Config) naming the key; a missing file
/// raises Error(Io).
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const json& doc);

/// Fully explicit form of a parsed config; parse_config_json(to_json(c)) == c.
json to_json(const ExperimentConfig& config);

/// The resolved config of one (method, seed) run, without the sweep section.
json run_config_json(const ExperimentConfig& config);

/// 16 hex digits of FNV-1a over the canonical dump of the run config with the
/// seed removed, so every seed of one setting shares a directory.
std::string config_hash(const ExperimentConfig& config);

/// output_dir, resolved against $GCDRO_OUTPUT_ROOT when that is set and the
/// directory is relative.
std::string output_root(const ExperimentConfig& config);

inline constexpr const char* kOutputRootEnv = "GCDRO_OUTPUT_ROOT";

} // namespace gcdro::cli
