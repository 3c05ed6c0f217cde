#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gcdro/core.hpp"
#include "gcdro/dro.hpp"
#include "gcdro/eval.hpp"
#include "gcdro/model.hpp"

namespace gcdro {

enum class Method { erm, resample, gdro_greedy, gdro_eg, gcdro };
enum class InnerUpdate { every_epoch, on_robust_drop };
enum class LrSchedule { constant, linear_decay };

std::string_view to_string(Method method);
std::string_view to_string(InnerUpdate criterion);
std::string_view to_string(LrSchedule schedule);
Method method_from_string(std::string_view name);
InnerUpdate inner_update_from_string(std::string_view name);
LrSchedule lr_schedule_from_string(std::string_view name);

struct TrainConfig {
    Method method = Method::erm;
    double alpha = 0.2;
    double beta = 0.5;
    double gamma_group_loss = 0.5;
    double gamma_cond_loss = 0.5;
    double gamma_prior = 0.01;
    double eta = 0.1;    // learning rate
    double eta_q = 0.01; // EG step size
    int epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    InnerUpdate inner_update = InnerUpdate::every_epoch;
    std::size_t eval_merge_threshold = 100;
    Arch arch = Arch::linear;
    std::size_t hidden_dim = 16;
    LrSchedule lr_schedule = LrSchedule::constant;
    // Keep the parameters after every step (memory heavy; used by tests).
    bool record_trajectory = false;
};

/// Throws InvalidArguments naming the first bad field.
void validate(const TrainConfig& config);

struct EpochSummary {
    int epoch = 0; // 1-based
    GroupMetrics valid;
    double train_loss = 0.0; // mean weighted minibatch loss
    bool inner_update = false;
};

struct QSnapshot {
    std::size_t step = 0;
    std::vector<double> q;
    std::vector<double> prior;
};

struct CondSnapshot {
    std::size_t step = 0;
    int epoch = 0;
    std::vector<double> cond_ratio;
};

struct RunRecord {
    Method method = Method::erm;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<EpochSummary> epochs;
    std::vector<ModelParams> checkpoints; // one per epoch
    std::vector<QSnapshot> q_snapshots;   // one per step, DRO methods only
    std::vector<CondSnapshot> cond_snapshots;
    std::vector<AppliedWeights> applied_weights; // one per epoch
    // Draws per training group, one row per epoch.
    std::vector<std::vector<std::size_t>> group_draws;
    // Largest q(g) / p_train(g) used in any step.
    double max_group_ratio = 0.0;
    std::vector<ModelParams> trajectory; // parameters after each step
    std::size_t steps = 0;
};

/// Runs the configured method. `train` carries the training partition in its
/// group field (ids dense in [0, N)); `valid` carries the clean evaluation
/// partition.
RunRecord train(const Dataset& train, const GroupLayout& train_layout, const Dataset& valid,
                const TrainConfig& config);

/// Whether the conditional weights should be refreshed after the latest epoch.
bool inner_update_check(const RunRecord& record, const TrainConfig& config);

/// 1-based epoch with the highest validation robust accuracy, earliest on ties.
int select_model(const RunRecord& record);
const ModelParams& best_checkpoint(const RunRecord& record);

} // namespace gcdro
