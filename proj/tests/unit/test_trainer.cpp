#include <cmath>

#include "doctest.h"
#include "gcdro/datagen.hpp"
#include "gcdro/eval.hpp"
#include "gcdro/trainer.hpp"
#include "helpers.hpp"

using namespace gcdro;

namespace {

struct Fixture {
    GeneratedData train = gen_table1({300, 1, 0.1, 0.35}, Split::train);
    GeneratedData valid = gen_table1({300, 1, 0.1, 0.35}, Split::valid);
};

TrainConfig quick(Method m) {
    TrainConfig c;
    c.method = m;
    c.epochs = 3;
    c.seed = 4;
    return c;
}

RunRecord with_robust(std::vector<double> robust) {
    RunRecord r;
    for (std::size_t i = 0; i < robust.size(); ++i) {
        EpochSummary e;
        e.epoch = static_cast<int>(i) + 1;
        e.valid.robust = robust[i];
        r.epochs.push_back(e);
        r.checkpoints.push_back(ModelParams::zeros(Arch::linear, 1, 0, 2));
        r.checkpoints.back().values()[0] = static_cast<double>(i);
    }
    return r;
}

} // namespace

TEST_CASE("training is deterministic for every method") {
    Fixture f;
    for (Method m : {Method::erm, Method::resample, Method::gdro_greedy, Method::gdro_eg, Method::gcdro}) {
        const auto a = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, quick(m));
        const auto b = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, quick(m));
        CHECK(a.checkpoints == b.checkpoints);
        CHECK(a.steps == b.steps);
    }
}

TEST_CASE("seeds change the run") {
    Fixture f;
    auto c = quick(Method::erm);
    const auto a = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, c);
    c.seed = 5;
    const auto b = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, c);
    CHECK_FALSE(a.checkpoints.back() == b.checkpoints.back());
}

TEST_CASE("erm applies weight 1 to every example") {
    Fixture f;
    const auto r = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, quick(Method::erm));
    for (const auto& epoch : r.applied_weights)
        for (std::size_t i = 0; i < epoch.sum.size(); ++i) CHECK(epoch.sum[i] == epoch.count[i]);
    CHECK(r.q_snapshots.empty());
}

TEST_CASE("group DRO never exceeds the alpha cap on the group ratio") {
    Fixture f;
    for (Method m : {Method::gdro_greedy, Method::gcdro})
        for (double alpha : {0.2, 0.5, 1.0}) {
            auto c = quick(m);
            c.alpha = alpha;
            const auto r = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, c);
            CHECK(r.max_group_ratio <= 1.0 / alpha * 1.05);
            for (const auto& s : r.q_snapshots)
                for (std::size_t g = 0; g < s.q.size(); ++g) CHECK(s.q[g] <= s.prior[g] / alpha + 1e-9);
        }
}

TEST_CASE("gcdro with alpha = beta = 1 follows the erm trajectory") {
    Fixture f;
    auto erm = quick(Method::erm);
    erm.record_trajectory = true;
    auto gc = erm;
    gc.method = Method::gcdro;
    gc.alpha = gc.beta = 1.0;
    const auto a = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, erm);
    const auto b = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, gc);
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t t = 0; t < a.trajectory.size(); ++t)
        for (std::size_t i = 0; i < a.trajectory[t].size(); ++i)
            CHECK(std::abs(a.trajectory[t].values()[i] - b.trajectory[t].values()[i]) <= 1e-10);
}

TEST_CASE("resample draws groups uniformly") {
    // Groups of very different sizes; a chi-square test on the draw counts
    // against the uniform expectation (3 degrees of freedom, p = 0.001 cut).
    const auto train = gen_blobs2d({}, Split::train);
    const auto valid = gen_blobs2d({}, Split::valid);
    auto c = quick(Method::resample);
    c.epochs = 5;
    const auto r = gcdro::train(train.dataset, train.clean.layout, valid.dataset, c);
    std::vector<double> draws(4, 0.0);
    for (const auto& epoch : r.group_draws)
        for (std::size_t g = 0; g < 4; ++g) draws[g] += static_cast<double>(epoch[g]);
    const double expected = test::sum(draws) / 4.0;
    double chi2 = 0.0;
    for (double d : draws) chi2 += (d - expected) * (d - expected) / expected;
    CHECK(chi2 < 16.27);
    const std::size_t steps_per_epoch = (train.dataset.size() + c.batch_size - 1) / c.batch_size;
    CHECK(r.steps == steps_per_epoch * 5);
}

TEST_CASE("erm on balanced separable data reaches high accuracy") {
    Blobs2DSpec spec;
    spec.minority_per_subclass = spec.majority_per_subclass;
    const auto train = gen_blobs2d(spec, Split::train);
    const auto valid = gen_blobs2d(spec, Split::valid);
    auto c = quick(Method::erm);
    c.epochs = 5;
    const auto r = gcdro::train(train.dataset, train.clean.layout, valid.dataset, c);
    CHECK(r.epochs.back().valid.average >= 0.99);
}

TEST_CASE("greedy group DRO beats erm on the worst blobs subclass") {
    Blobs2DSpec spec;
    spec.majority_per_subclass = 2000;
    spec.minority_per_subclass = 100;
    spec.subclass_means = {{{1, 2}, {1, -2}, {-1, -2}, {-1, 2}}};
    spec.subclass_cov = {0.36, 0, 0, 0.25};
    const auto train = gen_blobs2d(spec, Split::train);
    const auto valid = gen_blobs2d(spec, Split::valid);
    auto c = quick(Method::erm);
    c.eta = 0.002;
    c.epochs = 15;
    const auto erm = gcdro::train(train.dataset, train.clean.layout, valid.dataset, c);
    c.method = Method::gdro_greedy;
    const auto dro = gcdro::train(train.dataset, train.clean.layout, valid.dataset, c);
    const double erm_best = erm.epochs[static_cast<std::size_t>(select_model(erm) - 1)].valid.robust;
    const double dro_best = dro.epochs[static_cast<std::size_t>(select_model(dro) - 1)].valid.robust;
    CHECK(dro_best >= erm_best + 0.20);
}

TEST_CASE("gcdro records conditional ratios after each inner update") {
    Fixture f;
    const auto r = gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, quick(Method::gcdro));
    CHECK(r.cond_snapshots.size() == 3);
    for (const auto& s : r.cond_snapshots) CHECK(s.cond_ratio.size() == f.train.dataset.size());
    std::size_t updates = 0;
    for (const auto& e : r.epochs) updates += e.inner_update ? 1 : 0;
    CHECK(updates == 3);
}

TEST_CASE("inner update criteria") {
    TrainConfig every;
    every.inner_update = InnerUpdate::every_epoch;
    CHECK(inner_update_check(with_robust({0.1, 0.2, 0.3}), every));
    TrainConfig drop;
    drop.inner_update = InnerUpdate::on_robust_drop;
    CHECK_FALSE(inner_update_check(with_robust({0.6, 0.7}), drop));
    CHECK(inner_update_check(with_robust({0.7, 0.6}), drop));
    CHECK_FALSE(inner_update_check(with_robust({0.7}), drop));
    CHECK_THROWS_AS(inner_update_check(RunRecord{}, drop), Error);
}

TEST_CASE("model selection picks the earliest best epoch") {
    CHECK(select_model(with_robust({0.5, 0.8, 0.7})) == 2);
    CHECK(select_model(with_robust({0.4, 0.4, 0.4})) == 1);
    CHECK(select_model(with_robust({0.3})) == 1);
    CHECK(best_checkpoint(with_robust({0.5, 0.8, 0.7})).values()[0] == 1.0);
    try {
        select_model(RunRecord{});
        FAIL("expected NoCheckpoints");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoCheckpoints);
    }
}

TEST_CASE("config validation names the bad field") {
    auto expect_field = [](TrainConfig c, const std::string& field) {
        try {
            validate(c);
            FAIL("expected InvalidArguments");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidArguments);
            CHECK(std::string(e.what()).find(field) != std::string::npos);
        }
    };
    TrainConfig c;
    CHECK_NOTHROW(validate(c));
    c.alpha = 0.0;
    expect_field(c, "alpha");
    c = {};
    c.beta = 1.5;
    expect_field(c, "beta");
    c = {};
    c.epochs = 0;
    expect_field(c, "epochs");
    c = {};
    c.batch_size = 0;
    expect_field(c, "batch_size");
}

TEST_CASE("divergence reports the failing step") {
    Fixture f;
    auto c = quick(Method::erm);
    c.eta = 1e308;
    try {
        gcdro::train(f.train.dataset, f.train.clean.layout, f.valid.dataset, c);
        FAIL("expected Diverged");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Diverged);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("method names round trip") {
    for (Method m : {Method::erm, Method::resample, Method::gdro_greedy, Method::gdro_eg, Method::gcdro})
        CHECK(method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(method_from_string("sgd"), Error);
}
