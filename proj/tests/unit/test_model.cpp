#include <cmath>

#include "doctest.h"
#include "gcdro/model.hpp"
#include "helpers.hpp"

using namespace gcdro;

namespace {

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, int c) {
    Dataset ds;
    ds.feature_dim = static_cast<int>(d);
    ds.num_classes = c;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledExample ex;
        ex.features = test::random_vector(rng, d, -2.0, 2.0);
        ex.label = static_cast<int>(rng() % static_cast<std::uint64_t>(c));
        ex.stable_id = static_cast<std::int64_t>(i);
        ds.examples.push_back(ex);
    }
    return ds;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

// Independent softmax cross-entropy of a logit vector.
double cross_entropy(const std::vector<double>& logits, int label) {
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    return std::log(z) - logits[static_cast<std::size_t>(label)];
}

} // namespace

TEST_CASE("zero parameters give zero logits") {
    for (Arch arch : {Arch::linear, Arch::mlp1}) {
        const auto p = ModelParams::zeros(arch, 3, 4, 2);
        CHECK(forward_logits(p, std::vector<double>{1.0, -2.0, 0.5}) == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("linear identity weights return the input") {
    auto p = ModelParams::zeros(Arch::linear, 3, 0, 3);
    for (std::size_t i = 0; i < 3; ++i) p.w1(i, i) = 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> x(3, 0.0);
        x[k] = 1.0;
        CHECK(forward_logits(p, x) == x);
    }
}

TEST_CASE("mlp1 with zero output weights returns the output bias") {
    std::mt19937_64 rng(2);
    auto p = init_params(Arch::mlp1, 2, 5, 3, 11);
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 3; ++k) p.w2(j, k) = 0.0;
    p.b2(0) = 0.25;
    p.b2(1) = -1.0;
    p.b2(2) = 3.0;
    for (int trial = 0; trial < 20; ++trial)
        CHECK(forward_logits(p, test::random_vector(rng, 2, -10, 10)) == std::vector<double>{0.25, -1.0, 3.0});
}

TEST_CASE("example loss matches an independent cross-entropy and stays non-negative") {
    std::mt19937_64 rng(4);
    const auto ds = random_dataset(rng, 50, 3, 4);
    for (Arch arch : {Arch::linear, Arch::mlp1}) {
        const auto p = init_params(arch, 3, 6, 4, 9);
        for (const auto& ex : ds.examples) {
            const auto l = example_loss(p, ex);
            CHECK(l.loss >= 0.0);
            CHECK(l.loss == doctest::Approx(cross_entropy(forward_logits(p, ex.features), ex.label)).epsilon(1e-12));
            CHECK(l.correct == (predict(p, ex.features) == ex.label));
            CHECK(l.stable_id == ex.stable_id);
        }
    }
}

TEST_CASE("loss is stable for huge logits") {
    auto p = ModelParams::zeros(Arch::linear, 1, 0, 2);
    p.w1(0, 0) = 1000.0;
    LabeledExample ex;
    ex.features = {1.0};
    ex.label = 1;
    const auto l = example_loss(p, ex);
    CHECK(std::isfinite(l.loss));
    CHECK(l.loss == doctest::Approx(1000.0));
}

TEST_CASE("zero weights give zero loss and gradient") {
    std::mt19937_64 rng(6);
    const auto ds = random_dataset(rng, 10, 2, 3);
    const auto p = init_params(Arch::mlp1, 2, 4, 3, 1);
    const std::vector<double> w(10, 0.0);
    const auto r = weighted_loss_and_grad(p, ds, all_indices(10), w);
    CHECK(r.loss == 0.0);
    for (double g : r.grad.values()) CHECK(g == 0.0);
}

TEST_CASE("unit weights give the mean cross-entropy") {
    std::mt19937_64 rng(6);
    const auto ds = random_dataset(rng, 17, 2, 3);
    const auto p = init_params(Arch::linear, 2, 0, 3, 1);
    const std::vector<double> w(17, 1.0);
    std::vector<double> per(17);
    const auto r = weighted_loss_and_grad(p, ds, all_indices(17), w, per);
    double mean = 0.0;
    for (const auto& ex : ds.examples) mean += example_loss(p, ex).loss / 17.0;
    CHECK(r.loss == doctest::Approx(mean).epsilon(1e-13));
    for (std::size_t i = 0; i < 17; ++i) CHECK(per[i] == doctest::Approx(example_loss(p, ds.examples[i]).loss));
}

TEST_CASE("gradient matches central differences on every coordinate") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Arch arch = trial % 2 ? Arch::mlp1 : Arch::linear;
        const auto ds = random_dataset(rng, 8, 3, 3);
        auto p = init_params(arch, 3, 4, 3, rng());
        const auto w = test::random_vector(rng, 8, 0.0, 4.0);
        const auto batch = all_indices(8);
        const auto g = weighted_loss_and_grad(p, ds, batch, w).grad;
        const double h = 1e-5;
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto plus = p, minus = p;
            plus.values()[i] += h;
            minus.values()[i] -= h;
            const double fd = (weighted_loss_and_grad(plus, ds, batch, w).loss -
                               weighted_loss_and_grad(minus, ds, batch, w).loss) /
                              (2 * h);
            CHECK(std::abs(fd - g.values()[i]) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("weighted loss validates its inputs") {
    std::mt19937_64 rng(1);
    const auto ds = random_dataset(rng, 3, 2, 2);
    const auto p = init_params(Arch::linear, 2, 0, 2, 0);
    const auto batch = all_indices(3);
    CHECK_THROWS_AS(weighted_loss_and_grad(p, ds, batch, std::vector<double>{1, 1}), Error);
    try {
        weighted_loss_and_grad(p, ds, batch, std::vector<double>{1, -1, 1});
        FAIL("expected InvalidWeight");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidWeight);
    }
}

TEST_CASE("sgd step arithmetic") {
    auto p = ModelParams::zeros(Arch::linear, 1, 0, 2);
    auto g = p;
    CHECK(sgd_step(p, g, 0.1) == p);
    p.values()[0] = 1.0;
    g.values()[0] = 2.0;
    CHECK(sgd_step(p, g, 0.5).values()[0] == 0.0);
}

TEST_CASE("sgd step rejects a non-finite gradient and a bad rate") {
    const auto p = ModelParams::zeros(Arch::linear, 1, 0, 2);
    auto g = p;
    CHECK_THROWS_AS(sgd_step(p, g, 0.0), Error);
    g.values()[1] = NAN;
    try {
        sgd_step(p, g, 0.1);
        FAIL("expected Diverged");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Diverged);
    }
}

TEST_CASE("init is deterministic and within the fan-in bound") {
    const auto a = init_params(Arch::mlp1, 4, 9, 3, 5);
    CHECK(a == init_params(Arch::mlp1, 4, 9, 3, 5));
    CHECK_FALSE(a == init_params(Arch::mlp1, 4, 9, 3, 6));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 9; ++j) CHECK(std::abs(a.w1(i, j)) <= 0.5);
    for (std::size_t j = 0; j < 9; ++j)
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(a.w2(j, k)) <= 1.0 / 3.0);
}

TEST_CASE("architecture names round trip") {
    CHECK(arch_from_string(to_string(Arch::linear)) == Arch::linear);
    CHECK(arch_from_string(to_string(Arch::mlp1)) == Arch::mlp1);
    CHECK_THROWS_AS(arch_from_string("resnet"), Error);
}
