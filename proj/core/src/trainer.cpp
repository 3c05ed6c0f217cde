#include "gcdro/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gcdro {

std::string_view to_string(Method method) {
    switch (method) {
    case Method::erm: return "erm";
    case Method::resample: return "resample";
    case Method::gdro_greedy: return "gdro_greedy";
    case Method::gdro_eg: return "gdro_eg";
    case Method::gcdro: return "gcdro";
    }
    return "erm";
}

std::string_view to_string(InnerUpdate criterion) {
    return criterion == InnerUpdate::every_epoch ? "every_epoch" : "on_robust_drop";
}

std::string_view to_string(LrSchedule schedule) {
    return schedule == LrSchedule::constant ? "constant" : "linear_decay";
}

Method method_from_string(std::string_view name) {
    for (auto m : {Method::erm, Method::resample, Method::gdro_greedy, Method::gdro_eg, Method::gcdro})
        if (to_string(m) == name) return m;
    throw Error(ErrorCode::InvalidArguments, "unknown method '" + std::string(name) + "'");
}

InnerUpdate inner_update_from_string(std::string_view name) {
    for (auto c : {InnerUpdate::every_epoch, InnerUpdate::on_robust_drop})
        if (to_string(c) == name) return c;
    throw Error(ErrorCode::InvalidArguments, "unknown inner update criterion '" + std::string(name) + "'");
}

LrSchedule lr_schedule_from_string(std::string_view name) {
    for (auto s : {LrSchedule::constant, LrSchedule::linear_decay})
        if (to_string(s) == name) return s;
    throw Error(ErrorCode::InvalidArguments, "unknown learning-rate schedule '" + std::string(name) + "'");
}

void validate(const TrainConfig& c) {
    auto fail = [](const char* field, const char* why) {
        throw Error(ErrorCode::InvalidArguments, std::string(field) + ": " + why);
    };
    auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!unit(c.alpha)) fail("alpha", "must lie in (0, 1]");
    if (!unit(c.beta)) fail("beta", "must lie in (0, 1]");
    if (!unit(c.gamma_group_loss)) fail("gamma_group_loss", "must lie in (0, 1]");
    if (!unit(c.gamma_cond_loss)) fail("gamma_cond_loss", "must lie in (0, 1]");
    if (!unit(c.gamma_prior)) fail("gamma_prior", "must lie in (0, 1]");
    if (!(c.eta > 0.0) || !std::isfinite(c.eta)) fail("eta", "must be positive");
    if (!(c.eta_q > 0.0) || !std::isfinite(c.eta_q)) fail("eta_q", "must be positive");
    if (c.epochs < 1) fail("epochs", "must be at least 1");
    if (c.batch_size < 1) fail("batch_size", "must be at least 1");
    if (c.eval_merge_threshold < 1) fail("eval_merge_threshold", "must be at least 1");
    if (c.arch == Arch::mlp1 && c.hidden_dim < 1) fail("hidden_dim", "must be at least 1");
}

namespace {

bool uses_robust_state(Method m) { return m == Method::gdro_greedy || m == Method::gdro_eg || m == Method::gcdro; }

std::vector<int> group_by_id(const Dataset& ds) {
    std::vector<int> out(ds.size(), -1);
    for (const auto& ex : ds.examples) {
        if (ex.stable_id < 0 || static_cast<std::size_t>(ex.stable_id) >= ds.size() ||
            out[static_cast<std::size_t>(ex.stable_id)] != -1)
            throw Error(ErrorCode::InvalidArguments, "training stable ids must be unique and dense in [0, N)");
        out[static_cast<std::size_t>(ex.stable_id)] = ex.group;
    }
    return out;
}

std::vector<double> full_pass_losses_by_id(const ModelParams& params, const Dataset& ds) {
    std::vector<double> out(ds.size(), 0.0);
    for (const auto& ex : ds.examples) out[static_cast<std::size_t>(ex.stable_id)] = example_loss(params, ex).loss;
    return out;
}

class BatchPlan {
public:
    BatchPlan(const Dataset& ds, const GroupLayout& layout, const TrainConfig& config)
        : config_(config), order_(ds.size()), members_(static_cast<std::size_t>(layout.m())) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        for (std::size_t i = 0; i < ds.size(); ++i)
            members_[static_cast<std::size_t>(ds.examples[i].group)].push_back(i);
    }

    std::size_t steps_per_epoch() const { return (order_.size() + config_.batch_size - 1) / config_.batch_size; }

    // Minibatches (dataset indices) for one epoch.
    std::vector<std::vector<std::size_t>> epoch(std::mt19937_64& rng) {
        std::vector<std::vector<std::size_t>> batches;
        const std::size_t steps = steps_per_epoch();
        batches.reserve(steps);
        if (config_.method == Method::resample) {
            std::uniform_int_distribution<std::size_t> pick_group(0, members_.size() - 1);
            std::size_t drawn = 0;
            for (std::size_t s = 0; s < steps; ++s) {
                const std::size_t b = std::min(config_.batch_size, order_.size() - drawn);
                std::vector<std::size_t> batch;
                batch.reserve(b);
                for (std::size_t k = 0; k < b; ++k) {
                    const auto& group = members_[pick_group(rng)];
                    std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
                    batch.push_back(group[pick(rng)]);
                }
                drawn += b;
                batches.push_back(std::move(batch));
            }
            return batches;
        }
        std::shuffle(order_.begin(), order_.end(), rng);
        for (std::size_t start = 0; start < order_.size(); start += config_.batch_size) {
            const std::size_t end = std::min(order_.size(), start + config_.batch_size);
            batches.emplace_back(order_.begin() + static_cast<std::ptrdiff_t>(start),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return batches;
    }

private:
    const TrainConfig& config_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::size_t>> members_;
};

} // namespace

RunRecord train(const Dataset& train_ds, const GroupLayout& train_layout, const Dataset& valid,
                const TrainConfig& config) {
    validate(config);
    if (train_ds.size() == 0) throw Error(ErrorCode::InvalidArguments, "empty training set");
    if (valid.size() == 0) throw Error(ErrorCode::InvalidArguments, "empty validation set");
    if (auto issues = validate_dataset(train_ds, train_layout); !issues.empty())
        throw Error(ErrorCode::InvalidArguments,
                    "training set inconsistent with layout: " + std::string(to_string(issues.front().kind)));
    const auto group_of_id = group_by_id(train_ds);
    const GroupLayout valid_layout = GroupLayout::from_dataset(valid);

    RunRecord record;
    record.method = config.method;
    record.seed = config.seed;

    ModelParams params = init_params(config.arch, static_cast<std::size_t>(train_ds.feature_dim), config.hidden_dim,
                                     static_cast<std::size_t>(train_ds.num_classes), config.seed);
    std::mt19937_64 rng(config.seed);
    BatchPlan plan(train_ds, train_layout, config);

    std::optional<RobustState> state;
    if (uses_robust_state(config.method)) {
        RobustStateOptions opts;
        opts.alpha = config.alpha;
        opts.beta = config.beta;
        opts.gamma_group_loss = config.gamma_group_loss;
        opts.gamma_cond_loss = config.gamma_cond_loss;
        opts.gamma_prior = config.gamma_prior;
        state.emplace(train_layout, group_of_id, opts);
    }

    const std::size_t total_steps = plan.steps_per_epoch() * static_cast<std::size_t>(config.epochs);
    std::vector<double> weights, losses;
    std::vector<int> groups;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        AppliedWeights applied{std::vector<double>(train_ds.size(), 0.0),
                               std::vector<std::uint32_t>(train_ds.size(), 0)};
        std::vector<std::size_t> draws(static_cast<std::size_t>(train_layout.m()), 0);
        double loss_sum = 0.0;
        std::size_t epoch_steps = 0;

        for (const auto& batch : plan.epoch(rng)) {
            const std::size_t b = batch.size();
            groups.resize(b);
            for (std::size_t i = 0; i < b; ++i) {
                groups[i] = train_ds.examples[batch[i]].group;
                ++draws[static_cast<std::size_t>(groups[i])];
            }
            weights.assign(b, 1.0);

            if (state) {
                losses.resize(b);
                for (std::size_t i = 0; i < b; ++i) losses[i] = example_loss(params, train_ds.examples[batch[i]]).loss;
                for (double l : losses)
                    if (!std::isfinite(l))
                        throw Error(ErrorCode::Diverged, "non-finite loss at step " + std::to_string(record.steps + 1));
                state->observe_batch(groups, losses);
                if (config.method == Method::gdro_eg)
                    state->update_eg(config.eta_q);
                else
                    state->update_greedy();
                const auto& q = state->q_group();
                const auto& prior = state->group_prior_ema().values();
                for (std::size_t g = 0; g < q.size(); ++g)
                    record.max_group_ratio = std::max(record.max_group_ratio, q[g] / prior[g]);
                for (std::size_t i = 0; i < b; ++i)
                    weights[i] = state->weight(groups[i], train_ds.examples[batch[i]].stable_id);
                record.q_snapshots.push_back({record.steps + 1, q.values(), prior});
            }

            auto [loss, grad] = weighted_loss_and_grad(params, train_ds, batch, weights);
            if (!std::isfinite(loss))
                throw Error(ErrorCode::Diverged, "non-finite loss at step " + std::to_string(record.steps + 1));

            double lr = config.eta;
            if (config.lr_schedule == LrSchedule::linear_decay)
                lr *= 1.0 - static_cast<double>(record.steps) / static_cast<double>(total_steps);
            try {
                params = sgd_step(params, grad, lr);
            } catch (const Error& e) {
                throw Error(e.code(), std::string(e.what()) + " at step " + std::to_string(record.steps + 1));
            }
            ++record.steps;
            ++epoch_steps;
            loss_sum += loss;
            if (config.record_trajectory) record.trajectory.push_back(params);

            for (std::size_t i = 0; i < b; ++i) {
                const auto id = static_cast<std::size_t>(train_ds.examples[batch[i]].stable_id);
                applied.sum[id] += weights[i];
                ++applied.count[id];
            }
        }

        EpochSummary summary;
        summary.epoch = epoch;
        summary.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, epoch_steps));
        summary.valid = evaluate_groups(predict(params, valid), valid, valid_layout, config.eval_merge_threshold);
        record.epochs.push_back(std::move(summary));
        record.checkpoints.push_back(params);
        record.applied_weights.push_back(std::move(applied));
        record.group_draws.push_back(std::move(draws));

        if (config.method == Method::gcdro && inner_update_check(record, config)) {
            state->inner_update(full_pass_losses_by_id(params, train_ds));
            record.epochs.back().inner_update = true;
            record.cond_snapshots.push_back({record.steps, epoch, state->cond_ratio()});
        }
    }
    return record;
}

bool inner_update_check(const RunRecord& record, const TrainConfig& config) {
    if (record.epochs.empty()) throw Error(ErrorCode::InvalidArguments, "no completed epoch");
    if (config.inner_update == InnerUpdate::every_epoch) return true;
    const std::size_t n = record.epochs.size();
    return n >= 2 && record.epochs[n - 1].valid.robust < record.epochs[n - 2].valid.robust;
}

int select_model(const RunRecord& record) {
    if (record.epochs.empty()) throw Error(ErrorCode::NoCheckpoints, "run has no completed epochs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < record.epochs.size(); ++i)
        if (record.epochs[i].valid.robust > record.epochs[best].valid.robust) best = i;
    return record.epochs[best].epoch;
}

const ModelParams& best_checkpoint(const RunRecord& record) {
    const int epoch = select_model(record);
    if (record.checkpoints.size() < static_cast<std::size_t>(epoch))
        throw Error(ErrorCode::NoCheckpoints, "checkpoint for epoch " + std::to_string(epoch) + " missing");
    return record.checkpoints[static_cast<std::size_t>(epoch - 1)];
}

} // namespace gcdro
