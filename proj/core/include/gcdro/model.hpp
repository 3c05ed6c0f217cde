#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcdro/core.hpp"

namespace gcdro {

enum class Arch { linear, mlp1 };

std::string_view to_string(Arch arch);
Arch arch_from_string(std::string_view name);

/// Classifier weights stored contiguously as [W1 | b1 | W2 | b2], matrices
/// row-major. For `linear` the hidden width equals the class count and W2/b2
/// are empty. A gradient has exactly the same shape.
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(Arch arch, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes);

    /// Zero parameters for the given shape. `hidden_dim` is ignored for linear.
    static ModelParams zeros(Arch arch, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes);

    Arch arch() const noexcept { return arch_; }
    std::size_t input_dim() const noexcept { return d_; }
    std::size_t hidden_dim() const noexcept { return h_; }
    std::size_t num_classes() const noexcept { return c_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& w1(std::size_t i, std::size_t j) { return values_[i * h_ + j]; }
    double w1(std::size_t i, std::size_t j) const { return values_[i * h_ + j]; }
    double& b1(std::size_t j) { return values_[d_ * h_ + j]; }
    double b1(std::size_t j) const { return values_[d_ * h_ + j]; }
    double& w2(std::size_t j, std::size_t k) { return values_[w2_offset() + j * c_ + k]; }
    double w2(std::size_t j, std::size_t k) const { return values_[w2_offset() + j * c_ + k]; }
    double& b2(std::size_t k) { return values_[w2_offset() + h_ * c_ + k]; }
    double b2(std::size_t k) const { return values_[w2_offset() + h_ * c_ + k]; }

    bool same_shape(const ModelParams& other) const noexcept;
    bool all_finite() const noexcept;

    bool operator==(const ModelParams&) const = default;

private:
    std::size_t w2_offset() const noexcept { return d_ * h_ + h_; }

    Arch arch_ = Arch::linear;
    std::size_t d_ = 0, h_ = 0, c_ = 0;
    std::vector<double> values_;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every layer.
ModelParams init_params(Arch arch, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes,
                        std::uint64_t seed);

/// linear: W1^T x + b1; mlp1: W2^T tanh(W1^T x + b1) + b2.
std::vector<double> forward_logits(const ModelParams& params, std::span<const double> x);

int predict(const ModelParams& params, std::span<const double> x);
std::vector<int> predict(const ModelParams& params, const Dataset& ds);

struct PerExampleLoss {
    std::int64_t stable_id = 0;
    double loss = 0.0; // nats
    bool correct = false;
};

/// Softmax cross-entropy with max subtraction.
PerExampleLoss example_loss(const ModelParams& params, const LabeledExample& ex);

struct LossAndGrad {
    double loss = 0.0;
    ModelParams grad;
};

/// Loss (1/|B|) sum_i w_i l(x_i, y_i) and its exact gradient over the examples
/// ds.examples[batch[i]]. Per-example losses at the current parameters are
/// written to `per_example` when it is non-empty (same length as the batch).
LossAndGrad weighted_loss_and_grad(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> batch,
                                   std::span<const double> weights, std::span<double> per_example = {});

/// params - lr * grad. Throws Diverged on a non-finite gradient.
ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double lr);

} // namespace gcdro
