#include "gcdro/dro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gcdro {

// ---------------------------------------------------------------------------
// EMA

EmaTracker::EmaTracker(std::size_t n, double gamma) : gamma_(gamma), values_(n, 0.0), initialized_(n, false) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArguments, "EMA gamma must lie in (0, 1]");
}

void EmaTracker::observe_one(std::size_t i, double observation) {
    if (!std::isfinite(observation))
        throw Error(ErrorCode::InvalidObservation, "non-finite observation for entry " + std::to_string(i));
    if (!initialized_.at(i)) {
        values_[i] = observation;
        initialized_[i] = true;
    } else {
        values_[i] = gamma_ * observation + (1.0 - gamma_) * values_[i];
    }
}

void EmaTracker::observe(std::span<const std::optional<double>> observations) {
    if (observations.size() != values_.size())
        throw Error(ErrorCode::ShapeError, "observation count differs from tracker size");
    for (std::size_t i = 0; i < observations.size(); ++i)
        if (observations[i] && !std::isfinite(*observations[i]))
            throw Error(ErrorCode::InvalidObservation, "non-finite observation for entry " + std::to_string(i));
    for (std::size_t i = 0; i < observations.size(); ++i)
        if (observations[i]) observe_one(i, *observations[i]);
}

void EmaTracker::clear() { std::fill(initialized_.begin(), initialized_.end(), false); }

void EmaTracker::seed(std::span<const double> values) {
    if (values.size() != values_.size()) throw Error(ErrorCode::ShapeError, "seed size differs from tracker size");
    std::copy(values.begin(), values.end(), values_.begin());
    std::fill(initialized_.begin(), initialized_.end(), true);
}

void EmaTracker::renormalize() {
    const double sum = std::accumulate(values_.begin(), values_.end(), 0.0);
    if (!(sum > 0.0)) throw Error(ErrorCode::InvalidDistribution, "tracker has no mass to normalize");
    for (double& v : values_) v /= sum;
}

EmaTracker ema_update(EmaTracker tracker, std::span<const std::optional<double>> observations) {
    tracker.observe(observations);
    return tracker;
}

// ---------------------------------------------------------------------------
// Group weights

namespace {

void check_losses(std::span<const double> losses, std::size_t m) {
    if (losses.size() != m) throw Error(ErrorCode::ShapeError, "one loss per group required");
    for (double l : losses)
        if (!std::isfinite(l)) throw Error(ErrorCode::InvalidObservation, "non-finite group loss");
}

// Indices by decreasing key, lower index first on ties.
std::vector<std::size_t> order_decreasing(std::span<const double> keys) {
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
    return order;
}

} // namespace

SimplexVector greedy_group_weights(const SimplexVector& prior, std::span<const double> losses, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1]");
    check_losses(losses, prior.size());

    std::vector<double> q(prior.size(), 0.0);
    double remaining = 1.0;
    for (std::size_t g : order_decreasing(losses)) {
        if (remaining <= 0.0) break;
        const double take = std::min(prior[g] / alpha, remaining);
        q[g] = take;
        remaining -= take;
    }
    return SimplexVector(std::move(q));
}

SimplexVector eg_group_weights(const SimplexVector& q_prev, std::span<const double> losses, double eta_q) {
    if (!(eta_q > 0.0) || !std::isfinite(eta_q)) throw Error(ErrorCode::InvalidStepSize, "eta_q must be positive");
    check_losses(losses, q_prev.size());
    for (double v : q_prev.values())
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidDistribution, "EG needs strictly positive weights");

    double shift = -std::numeric_limits<double>::infinity();
    for (double l : losses) shift = std::max(shift, eta_q * l);
    std::vector<double> q(q_prev.size());
    double sum = 0.0;
    for (std::size_t g = 0; g < q.size(); ++g) {
        q[g] = q_prev[g] * std::exp(eta_q * losses[g] - shift);
        sum += q[g];
    }
    for (double& v : q) v /= sum;
    return SimplexVector(std::move(q));
}

// ---------------------------------------------------------------------------
// Group-conditional weights

namespace {

void check_cutoff_args(std::size_t total, std::size_t group_size, double beta) {
    if (group_size < 1 || group_size > total)
        throw Error(ErrorCode::InvalidArguments, "group size must lie in [1, N]");
    if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArguments, "beta must lie in (0, 1]");
}

} // namespace

double gc_upweighted_fraction(std::size_t total, std::size_t group_size, double beta) {
    check_cutoff_args(total, group_size, beta);
    if (group_size == total) return 0.0;
    const auto big_n = static_cast<double>(total);
    const auto n = static_cast<double>(group_size);
    return beta * (big_n - n) / (big_n - beta * n);
}

std::size_t gc_cutoff(std::size_t total, std::size_t group_size, double beta) {
    const double exact = gc_upweighted_fraction(total, group_size, beta) * static_cast<double>(group_size);
    // Absorb rounding noise so integral solutions are not pushed up by one.
    const double rounded = std::ceil(exact - 1e-9 * std::max(1.0, exact));
    return std::min(group_size, static_cast<std::size_t>(std::max(0.0, rounded)));
}

ConditionalWeights gc_conditional_weights(std::span<const double> losses, std::span<const std::int64_t> stable_ids,
                                          std::size_t total, double beta) {
    if (losses.size() != stable_ids.size()) throw Error(ErrorCode::ShapeError, "one stable id per loss required");
    const std::size_t n = losses.size();
    ConditionalWeights out;
    out.cutoff = gc_cutoff(total, n, beta);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (losses[a] != losses[b]) return losses[a] > losses[b];
        return stable_ids[a] < stable_ids[b];
    });

    const double high = 1.0 / beta;
    const double low = static_cast<double>(n) / static_cast<double>(total);
    out.raw_ratio.assign(n, low);
    for (std::size_t r = 0; r < out.cutoff; ++r) out.raw_ratio[order[r]] = high;

    // Sum of implied probabilities raw / n.
    const double mass = (static_cast<double>(out.cutoff) * high + static_cast<double>(n - out.cutoff) * low) /
                        static_cast<double>(n);
    out.ratio.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.ratio[i] = out.raw_ratio[i] / mass;
    return out;
}

double example_weight(double q_group, double prior_train, double cond_ratio) {
    if (!(prior_train > 0.0)) throw Error(ErrorCode::DegenerateGroupPrior, "training prior of the group is zero");
    return q_group / prior_train * cond_ratio;
}

// ---------------------------------------------------------------------------
// RobustState

RobustState::RobustState(const GroupLayout& layout, std::span<const int> group_of_id,
                         const RobustStateOptions& options)
    : layout_(layout), options_(options), group_of_id_(group_of_id.begin(), group_of_id.end()),
      members_(static_cast<std::size_t>(layout.m())), group_loss_(static_cast<std::size_t>(layout.m()),
                                                                   options.gamma_group_loss),
      group_prior_(static_cast<std::size_t>(layout.m()), options.gamma_prior),
      instance_loss_(group_of_id.size(), options.gamma_cond_loss),
      q_group_(SimplexVector::uniform(static_cast<std::size_t>(layout.m()))), cond_ratio_(group_of_id.size(), 1.0) {
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1]");
    if (!(options.beta > 0.0 && options.beta <= 1.0))
        throw Error(ErrorCode::InvalidArguments, "beta must lie in (0, 1]");
    if (group_of_id.size() != layout.total())
        throw Error(ErrorCode::ShapeError, "group assignment size differs from layout total");
    for (std::size_t id = 0; id < group_of_id_.size(); ++id) {
        const int g = group_of_id_[id];
        if (g < 0 || g >= layout.m()) throw Error(ErrorCode::ShapeError, "group id outside layout");
        members_[static_cast<std::size_t>(g)].push_back(static_cast<std::int64_t>(id));
    }
    group_prior_.seed(layout.prior());
}

void RobustState::observe_batch(std::span<const int> groups, std::span<const double> losses) {
    if (groups.size() != losses.size()) throw Error(ErrorCode::ShapeError, "one group per loss required");
    if (groups.empty()) return;
    const auto m = static_cast<std::size_t>(layout_.m());
    std::vector<double> sum(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto g = static_cast<std::size_t>(groups[i]);
        sum.at(g) += losses[i];
        ++count[g];
    }
    std::vector<std::optional<double>> loss_obs(m);
    std::vector<std::optional<double>> share_obs(m);
    for (std::size_t g = 0; g < m; ++g) {
        if (count[g] > 0) loss_obs[g] = sum[g] / static_cast<double>(count[g]);
        share_obs[g] = static_cast<double>(count[g]) / static_cast<double>(groups.size());
    }
    group_loss_.observe(loss_obs);
    group_prior_.observe(share_obs);
    group_prior_.renormalize();
}

SimplexVector RobustState::prior_train() const { return normalize_simplex(group_prior_.values()); }

void RobustState::update_greedy() {
    q_group_ = greedy_group_weights(prior_train(), group_loss_.values(), options_.alpha);
}

void RobustState::update_eg(double eta_q) { q_group_ = eg_group_weights(q_group_, group_loss_.values(), eta_q); }

void RobustState::set_q_to_prior() { q_group_ = prior_train(); }

void RobustState::inner_update(std::span<const double> losses_by_id) {
    if (losses_by_id.size() != group_of_id_.size())
        throw Error(ErrorCode::ShapeError, "one loss per training instance required");
    for (std::size_t id = 0; id < losses_by_id.size(); ++id) instance_loss_.observe_one(id, losses_by_id[id]);

    std::vector<double> losses;
    for (const auto& ids : members_) {
        losses.clear();
        for (auto id : ids) losses.push_back(instance_loss_[static_cast<std::size_t>(id)]);
        auto weights = gc_conditional_weights(losses, ids, layout_.total(), options_.beta);
        for (std::size_t i = 0; i < ids.size(); ++i) cond_ratio_[static_cast<std::size_t>(ids[i])] = weights.ratio[i];
    }
    group_loss_.clear();
}

double RobustState::weight(int group, std::int64_t stable_id) const {
    const auto g = static_cast<std::size_t>(group);
    return example_weight(q_group_[g], group_prior_[g], cond_ratio_.at(static_cast<std::size_t>(stable_id)));
}

} // namespace gcdro
