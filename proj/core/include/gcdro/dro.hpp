#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gcdro/core.hpp"

namespace gcdro {

/// Exponential moving average per entry: value <- gamma * obs + (1 - gamma) * value.
/// An uninitialized entry takes its first observation verbatim and reads as 0
/// until then (or keeps its last value after clear()).
class EmaTracker {
public:
    EmaTracker() = default;
    EmaTracker(std::size_t n, double gamma);

    /// Entries without a value are left untouched.
    void observe(std::span<const std::optional<double>> observations);
    void observe_one(std::size_t i, double observation);

    /// Marks every entry uninitialized without erasing its value.
    void clear();
    void seed(std::span<const double> values);

    double gamma() const noexcept { return gamma_; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    bool initialized(std::size_t i) const { return initialized_[i]; }

    /// Rescales the values to sum to one (used for the group-prior tracker).
    void renormalize();

private:
    double gamma_ = 1.0;
    std::vector<double> values_;
    std::vector<bool> initialized_;
};

EmaTracker ema_update(EmaTracker tracker, std::span<const std::optional<double>> observations);

/// Maximizer of sum_g q(g) L(g) over {q in simplex : q(g) <= prior(g) / alpha}.
/// Groups are visited by decreasing loss (lower index first on ties), each
/// taking min(prior/alpha, remaining mass).
SimplexVector greedy_group_weights(const SimplexVector& prior, std::span<const double> losses, double alpha);

/// q(g) proportional to q_prev(g) exp(eta_q L(g)).
SimplexVector eg_group_weights(const SimplexVector& q_prev, std::span<const double> losses, double eta_q);

/// Unrounded share of a group of size n whose instances sit on the upper tier:
/// beta (N - n) / (N - beta n). Zero when n == N.
double gc_upweighted_fraction(std::size_t total, std::size_t group_size, double beta);

/// ceil(beta n (N - n) / (N - beta n)) clamped to [0, n]: the count that makes
/// cutoff / (beta n) + (n - cutoff) / N = 1 before rounding.
std::size_t gc_cutoff(std::size_t total, std::size_t group_size, double beta);

struct ConditionalWeights {
    // Within-group importance ratio n_g q(x, y | g) per instance, in input order.
    std::vector<double> ratio;
    // Two-tier ratios before renormalization: 1/beta or n_g/N.
    std::vector<double> raw_ratio;
    std::size_t cutoff = 0;
};

/// Instances ranked by decreasing loss (lower stable id first on ties). The top
/// `gc_cutoff` get ratio 1/beta, the rest n_g/N, then all are rescaled so the
/// implied q(x, y | g) = ratio / n_g sums to one over the group.
ConditionalWeights gc_conditional_weights(std::span<const double> losses, std::span<const std::int64_t> stable_ids,
                                          std::size_t total, double beta);

/// (q(g) / p_train(g)) * cond_ratio.
double example_weight(double q_group, double prior_train, double cond_ratio);

struct RobustStateOptions {
    double alpha = 0.2;
    double beta = 0.5;
    double gamma_group_loss = 0.5;
    double gamma_cond_loss = 0.5;
    double gamma_prior = 0.01;
};

/// Worst-case distribution state for one training run over a fixed training
/// set whose stable ids are dense in [0, N).
class RobustState {
public:
    RobustState(const GroupLayout& layout, std::span<const int> group_of_id, const RobustStateOptions& options);

    /// Folds one minibatch into the group-loss and group-prior trackers.
    void observe_batch(std::span<const int> groups, std::span<const double> losses);

    void update_greedy();
    void update_eg(double eta_q);
    /// Pins q to the current prior estimate (weights become 1 before cond_ratio).
    void set_q_to_prior();

    /// Recomputes every group's conditional ratios from full-pass instance
    /// losses (indexed by stable id) and clears the group-loss history.
    void inner_update(std::span<const double> losses_by_id);

    double weight(int group, std::int64_t stable_id) const;

    const GroupLayout& layout() const noexcept { return layout_; }
    const RobustStateOptions& options() const noexcept { return options_; }
    const EmaTracker& group_loss_ema() const noexcept { return group_loss_; }
    const EmaTracker& group_prior_ema() const noexcept { return group_prior_; }
    const EmaTracker& instance_loss_ema() const noexcept { return instance_loss_; }
    const SimplexVector& q_group() const noexcept { return q_group_; }
    const std::vector<double>& cond_ratio() const noexcept { return cond_ratio_; }
    SimplexVector prior_train() const;

private:
    GroupLayout layout_;
    RobustStateOptions options_;
    std::vector<int> group_of_id_;
    std::vector<std::vector<std::int64_t>> members_;
    EmaTracker group_loss_;
    EmaTracker group_prior_;
    EmaTracker instance_loss_;
    SimplexVector q_group_;
    std::vector<double> cond_ratio_;
};

} // namespace gcdro
