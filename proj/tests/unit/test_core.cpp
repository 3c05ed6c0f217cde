#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace gcdro;
using gcdro::test::tiny_dataset;

TEST_CASE("normalize_simplex examples") {
    CHECK(normalize_simplex(std::vector<double>{2, 2}).values() == std::vector<double>{0.5, 0.5});
    CHECK(normalize_simplex(std::vector<double>{1, 0, 0}).values() == std::vector<double>{1, 0, 0});
    const auto v = normalize_simplex(std::vector<double>{0.5, 1.0});
    CHECK(v[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
}

TEST_CASE("normalize_simplex rejects negative, empty and massless input") {
    for (const std::vector<double>& bad : {std::vector<double>{}, {0.0, 0.0}, {1.0, -0.1}, {NAN, 1.0}}) {
        try {
            normalize_simplex(bad);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidDistribution);
        }
    }
}

TEST_CASE("normalized vectors are on the simplex for random input") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const auto raw = test::random_vector(rng, 1 + rng() % 12, 0.0, 100.0);
        const auto v = normalize_simplex(raw);
        CHECK(is_simplex(v.values()));
        for (double x : v.values()) CHECK(x >= 0.0);
    }
}

TEST_CASE("SimplexVector validates its input") {
    CHECK_NOTHROW(SimplexVector({0.25, 0.75}));
    CHECK_THROWS_AS(SimplexVector({0.5, 0.6}), Error);
    CHECK_THROWS_AS(SimplexVector({1.5, -0.5}), Error);
    CHECK(SimplexVector::uniform(4).values() == std::vector<double>(4, 0.25));
}

TEST_CASE("GroupLayout sizes, total and prior agree") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> sizes(1 + rng() % 10);
        for (auto& s : sizes) s = 1 + rng() % 1000;
        const auto layout = GroupLayout::from_sizes(sizes);
        std::size_t total = 0;
        for (auto s : sizes) total += s;
        CHECK(layout.total() == total);
        CHECK(std::abs(test::sum(layout.prior()) - 1.0) <= 1e-12);
        CHECK(layout.m() == static_cast<int>(sizes.size()));
    }
    CHECK_THROWS_AS(GroupLayout::from_sizes({}), Error);
    CHECK_THROWS_AS(GroupLayout::from_sizes({3, 0}), Error);
}

TEST_CASE("GroupLayout from an assignment counts each group") {
    const std::vector<int> groups{0, 1, 1, 2, 2, 2};
    const auto layout = GroupLayout::from_assignment(groups, 3);
    CHECK(layout.sizes() == std::vector<std::size_t>{1, 2, 3});
    CHECK_THROWS_AS(GroupLayout::from_assignment(groups, 4), Error);
}

TEST_CASE("validate_dataset on a consistent dataset is empty") {
    const auto ds = tiny_dataset({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    CHECK(validate_dataset(ds, GroupLayout::from_sizes({5, 5})).empty());
}

TEST_CASE("validate_dataset flags a group index equal to m") {
    auto ds = tiny_dataset({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    ds.examples[3].group = 2;
    const auto issues = validate_dataset(ds, GroupLayout::from_sizes({5, 5}));
    const auto n = std::count_if(issues.begin(), issues.end(),
                                 [](const ValidationIssue& i) { return i.kind == IssueKind::group_out_of_range; });
    CHECK(n == 1);
}

TEST_CASE("validate_dataset flags a size mismatch") {
    const auto ds = tiny_dataset({0, 0, 0, 0, 1, 1, 1, 1, 1});
    const auto issues = validate_dataset(ds, GroupLayout::from_sizes({5, 5}));
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == IssueKind::size_mismatch);
    CHECK(issues[0].group == 0);
}

TEST_CASE("validate_dataset flags duplicate ids, bad labels and feature widths") {
    auto ds = tiny_dataset({0, 0, 1, 1});
    ds.examples[1].stable_id = 0;
    ds.examples[2].label = 5;
    ds.examples[3].features.push_back(1.0);
    const auto issues = validate_dataset(ds, GroupLayout::from_sizes({2, 2}));
    auto has = [&](IssueKind k) {
        return std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& i) { return i.kind == k; });
    };
    CHECK(has(IssueKind::duplicate_id));
    CHECK(has(IssueKind::label_out_of_range));
    CHECK(has(IssueKind::feature_dim_mismatch));
}

TEST_CASE("dataset CSV round trip is exact") {
    std::mt19937_64 rng(5);
    auto ds = tiny_dataset({0, 1, 2, 1, 0, 2});
    for (auto& ex : ds.examples) ex.features = test::random_vector(rng, 2, -1e3, 1e3);
    ds.examples[2].attribute.reset();
    std::stringstream buf;
    write_dataset_csv(buf, ds);
    const auto back = read_dataset_csv(buf, 2, Split::train);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.examples[i].features == ds.examples[i].features);
        CHECK(back.examples[i].label == ds.examples[i].label);
        CHECK(back.examples[i].group == ds.examples[i].group);
        CHECK(back.examples[i].attribute == ds.examples[i].attribute);
        CHECK(back.examples[i].stable_id == ds.examples[i].stable_id);
    }
}

TEST_CASE("with_groups replaces only the group field") {
    const auto ds = tiny_dataset({0, 0, 1, 1});
    const std::vector<int> assignment{1, 0, 1, 0};
    const auto out = with_groups(ds, assignment);
    CHECK(group_assignment(out) == assignment);
    CHECK(out.examples[2].features == ds.examples[2].features);
}
