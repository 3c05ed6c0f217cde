#include "gcdro/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gcdro {

std::string_view to_string(Arch arch) { return arch == Arch::linear ? "linear" : "mlp1"; }

Arch arch_from_string(std::string_view name) {
    if (name == "linear") return Arch::linear;
    if (name == "mlp1") return Arch::mlp1;
    throw Error(ErrorCode::InvalidArguments, "unknown architecture '" + std::string(name) + "'");
}

ModelParams::ModelParams(Arch arch, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes)
    : arch_(arch), d_(input_dim), h_(arch == Arch::linear ? num_classes : hidden_dim), c_(num_classes) {
    if (d_ == 0 || c_ < 2 || h_ == 0)
        throw Error(ErrorCode::ShapeError, "model needs input_dim >= 1, hidden_dim >= 1 and num_classes >= 2");
    std::size_t n = d_ * h_ + h_;
    if (arch_ == Arch::mlp1) n += h_ * c_ + c_;
    values_.assign(n, 0.0);
}

ModelParams ModelParams::zeros(Arch arch, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes) {
    return ModelParams(arch, input_dim, hidden_dim, num_classes);
}

bool ModelParams::same_shape(const ModelParams& other) const noexcept {
    return arch_ == other.arch_ && d_ == other.d_ && h_ == other.h_ && c_ == other.c_;
}

bool ModelParams::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ModelParams init_params(Arch arch, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes,
                        std::uint64_t seed) {
    ModelParams p(arch, input_dim, hidden_dim, num_classes);
    std::mt19937_64 rng(seed);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    std::uniform_real_distribution<double> first(-r1, r1);
    auto values = p.values();
    const std::size_t first_layer = p.input_dim() * p.hidden_dim() + p.hidden_dim();
    for (std::size_t i = 0; i < first_layer; ++i) values[i] = first(rng);
    if (arch == Arch::mlp1) {
        const double r2 = 1.0 / std::sqrt(static_cast<double>(p.hidden_dim()));
        std::uniform_real_distribution<double> second(-r2, r2);
        for (std::size_t i = first_layer; i < values.size(); ++i) values[i] = second(rng);
    }
    return p;
}

namespace {

void check_input(const ModelParams& params, std::span<const double> x) {
    if (x.size() != params.input_dim())
        throw Error(ErrorCode::ShapeError, "input has " + std::to_string(x.size()) + " features, model expects " +
                                               std::to_string(params.input_dim()));
}

// Hidden pre-activations (linear: the logits themselves).
void first_layer(const ModelParams& p, std::span<const double> x, std::vector<double>& out) {
    const std::size_t h = p.hidden_dim();
    out.resize(h);
    for (std::size_t j = 0; j < h; ++j) out[j] = p.b1(j);
    for (std::size_t i = 0; i < p.input_dim(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < h; ++j) out[j] += p.w1(i, j) * xi;
    }
}

void second_layer(const ModelParams& p, std::span<const double> hidden, std::vector<double>& out) {
    const std::size_t c = p.num_classes();
    out.resize(c);
    for (std::size_t k = 0; k < c; ++k) out[k] = p.b2(k);
    for (std::size_t j = 0; j < p.hidden_dim(); ++j)
        for (std::size_t k = 0; k < c; ++k) out[k] += p.w2(j, k) * hidden[j];
}

// Cross-entropy of `logits` at `label`; fills `probs` with the softmax.
double softmax_xent(std::span<const double> logits, int label, std::vector<double>& probs) {
    const auto top = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    const double zmax = logits[top];
    probs.resize(logits.size());
    double rest = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        probs[k] = std::exp(logits[k] - zmax);
        if (k != top) rest += probs[k];
    }
    const double denom = 1.0 + rest;
    for (double& pk : probs) pk /= denom;
    return std::log1p(rest) + zmax - logits[static_cast<std::size_t>(label)];
}

struct Workspace {
    std::vector<double> pre, hidden, logits, probs, dhidden;
};

// Loss at one example; when `scale` != 0 accumulates scale * d(loss)/d(params).
double example_pass(const ModelParams& p, const LabeledExample& ex, double scale, ModelParams* grad, Workspace& ws) {
    check_input(p, ex.features);
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= p.num_classes())
        throw Error(ErrorCode::ShapeError, "label " + std::to_string(ex.label) + " outside model classes");
    const auto x = std::span<const double>(ex.features);
    const std::size_t d = p.input_dim(), h = p.hidden_dim(), c = p.num_classes();

    first_layer(p, x, ws.pre);
    double loss = 0.0;
    if (p.arch() == Arch::linear) {
        loss = softmax_xent(ws.pre, ex.label, ws.probs);
    } else {
        ws.hidden.resize(h);
        for (std::size_t j = 0; j < h; ++j) ws.hidden[j] = std::tanh(ws.pre[j]);
        second_layer(p, ws.hidden, ws.logits);
        loss = softmax_xent(ws.logits, ex.label, ws.probs);
    }
    if (grad == nullptr || scale == 0.0) return loss;

    // dlogits = probs - onehot(label)
    ws.probs[static_cast<std::size_t>(ex.label)] -= 1.0;
    ModelParams& g = *grad;
    if (p.arch() == Arch::linear) {
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = scale * x[i];
            for (std::size_t k = 0; k < c; ++k) g.w1(i, k) += xi * ws.probs[k];
        }
        for (std::size_t k = 0; k < c; ++k) g.b1(k) += scale * ws.probs[k];
        return loss;
    }

    ws.dhidden.assign(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            g.w2(j, k) += scale * ws.hidden[j] * ws.probs[k];
            acc += p.w2(j, k) * ws.probs[k];
        }
        ws.dhidden[j] = acc * (1.0 - ws.hidden[j] * ws.hidden[j]);
    }
    for (std::size_t k = 0; k < c; ++k) g.b2(k) += scale * ws.probs[k];
    for (std::size_t i = 0; i < d; ++i) {
        const double xi = scale * x[i];
        for (std::size_t j = 0; j < h; ++j) g.w1(i, j) += xi * ws.dhidden[j];
    }
    for (std::size_t j = 0; j < h; ++j) g.b1(j) += scale * ws.dhidden[j];
    return loss;
}

} // namespace

std::vector<double> forward_logits(const ModelParams& params, std::span<const double> x) {
    check_input(params, x);
    std::vector<double> pre;
    first_layer(params, x, pre);
    if (params.arch() == Arch::linear) return pre;
    for (double& v : pre) v = std::tanh(v);
    std::vector<double> logits;
    second_layer(params, pre, logits);
    return logits;
}

int predict(const ModelParams& params, std::span<const double> x) {
    auto logits = forward_logits(params, x);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<int> predict(const ModelParams& params, const Dataset& ds) {
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& ex : ds.examples) out.push_back(predict(params, ex.features));
    return out;
}

PerExampleLoss example_loss(const ModelParams& params, const LabeledExample& ex) {
    Workspace ws;
    PerExampleLoss out;
    out.stable_id = ex.stable_id;
    out.loss = example_pass(params, ex, 0.0, nullptr, ws);
    out.correct = predict(params, ex.features) == ex.label;
    return out;
}

LossAndGrad weighted_loss_and_grad(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> batch,
                                   std::span<const double> weights, std::span<double> per_example) {
    if (weights.size() != batch.size())
        throw Error(ErrorCode::ShapeError, "weights and batch differ in length");
    if (!per_example.empty() && per_example.size() != batch.size())
        throw Error(ErrorCode::ShapeError, "per-example loss buffer differs from batch length");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidWeight, "weights must be finite and >= 0");

    LossAndGrad out{0.0, ModelParams::zeros(params.arch(), params.input_dim(), params.hidden_dim(),
                                            params.num_classes())};
    if (batch.empty()) return out;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Workspace ws;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& ex = ds.examples.at(batch[i]);
        const double scale = weights[i] * inv_b;
        const double loss = example_pass(params, ex, scale, &out.grad, ws);
        if (!per_example.empty()) per_example[i] = loss;
        out.loss += scale * loss;
    }
    return out;
}

ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double lr) {
    if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArguments, "learning rate must be positive");
    if (!params.same_shape(grad)) throw Error(ErrorCode::ShapeError, "gradient shape differs from parameters");
    if (!grad.all_finite()) throw Error(ErrorCode::Diverged, "non-finite gradient");
    ModelParams next = params;
    auto out = next.values();
    auto g = grad.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= lr * g[i];
    return next;
}

} // namespace gcdro
