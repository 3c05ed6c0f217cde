#pragma once

#include <string>

#include "gcdro/cli/config.hpp"
#include "gcdro/eval.hpp"
#include "gcdro/trainer.hpp"

namespace gcdro::cli {

json to_json(const GroupLayout& layout);
json to_json(const Partition& partition);
json to_json(const GroupMetrics& metrics);
json to_json(const EpochSummary& epoch);

/// Checkpoint file body. Doubles round-trip exactly through the JSON dump.
json checkpoint_json(const ModelParams& params, int epoch);
ModelParams params_from_json(const json& doc);

/// One epoch summary per line.
std::string run_record_jsonl(const RunRecord& record);

/// step,q0..,prior0.. per line.
std::string q_trajectory_csv(const RunRecord& record);

/// epoch,step,id,cond_ratio per line for every inner update.
std::string cond_ratio_csv(const RunRecord& record);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
json read_json_file(const std::string& path);

} // namespace gcdro::cli
