#include <map>
#include <set>

#include "doctest.h"
#include "gcdro/datagen.hpp"
#include "gcdro/partition.hpp"
#include "helpers.hpp"

using namespace gcdro;

namespace {

Dataset cells_dataset(const std::vector<Cell>& cells) {
    Dataset ds;
    ds.num_classes = 3;
    ds.feature_dim = 1;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        LabeledExample ex;
        ex.features = {static_cast<double>(i)};
        ex.attribute = cells[i].attribute;
        ex.label = cells[i].label;
        ex.stable_id = static_cast<std::int64_t>(i);
        ds.examples.push_back(ex);
    }
    return ds;
}

} // namespace

TEST_CASE("clean partition of a full 2x2 grid has four groups") {
    const auto ds = cells_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 1}});
    const auto p = clean_partition(ds);
    CHECK(p.layout.m() == 4);
    CHECK(p.layout.sizes() == std::vector<std::size_t>{1, 1, 1, 2});
    CHECK(cell_name(p.cells[2]) == "a1_y0");
}

TEST_CASE("clean partition skips empty cells") {
    const auto ds = cells_dataset({{0, 0}, {0, 2}, {1, 0}, {1, 1}});
    const auto p = clean_partition(ds);
    CHECK(p.layout.m() == 4);
    for (const auto& c : p.cells) CHECK_FALSE((c.attribute == 1 && c.label == 2));
}

TEST_CASE("clean partition needs attributes") {
    auto ds = cells_dataset({{0, 0}, {1, 1}});
    ds.examples[1].attribute.reset();
    CHECK_THROWS_AS(clean_partition(ds), Error);
}

TEST_CASE("identity merge equals the clean partition") {
    const auto ds = cells_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 1}, {1, 0}});
    const auto clean = clean_partition(ds);
    MergeMap identity;
    for (std::size_t g = 0; g < clean.cells.size(); ++g) identity[clean.cells[g]] = static_cast<int>(g);
    const auto merged = merged_partition(ds, identity);
    CHECK(merged.assignment == clean.assignment);
    CHECK(merged.layout == clean.layout);
}

TEST_CASE("table1 imperfect groups are equal halves that mix cells") {
    const auto gen = gen_table1({1000, 4, 0.1, 0.05});
    CHECK(gen.imperfect.layout.sizes() == std::vector<std::size_t>{1000, 1000});
    std::set<std::pair<int, int>> cells_g0, cells_g1;
    for (std::size_t i = 0; i < gen.dataset.size(); ++i) {
        const auto& ex = gen.dataset.examples[i];
        (gen.imperfect.assignment[i] == 0 ? cells_g0 : cells_g1).insert({*ex.attribute, ex.label});
    }
    CHECK(cells_g0.size() == 3);
    CHECK(cells_g1.size() == 3);
}

TEST_CASE("three-group merge of nine cells sums cell sizes") {
    std::vector<Cell> cells;
    std::map<Cell, std::size_t> cell_sizes;
    for (int a = 0; a < 3; ++a)
        for (int y = 0; y < 3; ++y)
            for (int k = 0; k <= a + 2 * y; ++k) {
                cells.push_back({a, y});
                ++cell_sizes[{a, y}];
            }
    const auto ds = cells_dataset(cells);
    MergeMap map;
    for (int a = 0; a < 3; ++a)
        for (int y = 0; y < 3; ++y) map[{a, y}] = y;
    const auto p = merged_partition(ds, map);
    REQUIRE(p.layout.m() == 3);
    for (int y = 0; y < 3; ++y) {
        std::size_t want = 0;
        for (int a = 0; a < 3; ++a) want += cell_sizes[{a, y}];
        CHECK(p.layout.size(y) == want);
    }
}

TEST_CASE("merge map must cover every cell and use dense ids") {
    const auto ds = cells_dataset({{0, 0}, {1, 1}});
    try {
        merged_partition(ds, MergeMap{{{0, 0}, 0}});
        FAIL("expected IncompleteMergeMap");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IncompleteMergeMap);
    }
    CHECK_THROWS_AS(merged_partition(ds, MergeMap{{{0, 0}, 0}, {{1, 1}, 2}}), Error);
}

TEST_CASE("kmeans recovers well separated blobs") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.2);
    std::vector<std::vector<double>> points;
    std::vector<int> truth;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 40; ++i) {
            points.push_back({20.0 * c + noise(rng), -15.0 * c + noise(rng)});
            truth.push_back(c);
        }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = kmeans(points, 3, 50, seed);
        CHECK(adjusted_rand_index(r.partition.assignment, truth) == 1.0);
        for (std::size_t i = 1; i < r.objective_history.size(); ++i)
            CHECK(r.objective_history[i] <= r.objective_history[i - 1] * (1 + 1e-12));
    }
}

TEST_CASE("kmeans objective never increases on random data") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<double>> points;
        const std::size_t n = 20 + rng() % 80;
        for (std::size_t i = 0; i < n; ++i) points.push_back(test::random_vector(rng, 3, -5.0, 5.0));
        const int k = 2 + static_cast<int>(rng() % 5);
        const auto r = kmeans(points, k, 100, rng());
        for (std::size_t i = 1; i < r.objective_history.size(); ++i)
            CHECK(r.objective_history[i] <= r.objective_history[i - 1] * (1 + 1e-12));
        CHECK(r.partition.layout.m() == k);
        CHECK(r.partition.layout.total() == n);
    }
}

TEST_CASE("kmeans with k = 1 puts everything in group 0") {
    const std::vector<std::vector<double>> points{{0, 0}, {1, 1}, {5, 5}};
    const auto r = kmeans(points, 1, 10, 0);
    CHECK(r.partition.assignment == std::vector<int>{0, 0, 0});
}

TEST_CASE("kmeans on identical points still yields k non-empty groups") {
    const std::vector<std::vector<double>> points(6, std::vector<double>{1.0, 2.0});
    const auto r = kmeans(points, 2, 10, 3);
    CHECK(r.iterations <= 10);
    CHECK(r.partition.layout.m() == 2);
    CHECK(r.partition.layout.total() == 6);
}

TEST_CASE("kmeans rejects too few points") {
    const std::vector<std::vector<double>> points{{0, 0}};
    CHECK_THROWS_AS(kmeans(points, 2, 10, 0), Error);
}

TEST_CASE("make_partition dispatches on the kind") {
    const auto gen = gen_table1({50, 2, 0.1, 0.05});
    PartitionSpec spec;
    CHECK(make_partition(gen.dataset, spec).layout.m() == 4);
    spec.kind = PartitionKind::kmeans;
    spec.k = 2;
    CHECK(make_partition(gen.dataset, spec).layout.m() == 2);
    spec.kind = PartitionKind::generator;
    CHECK_THROWS_AS(make_partition(gen.dataset, spec), Error);
}

TEST_CASE("adjusted rand index is label-permutation invariant") {
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    const std::vector<int> b{2, 2, 0, 0, 1, 1};
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(1.0));
    const std::vector<int> c{0, 1, 0, 1, 0, 1};
    CHECK(adjusted_rand_index(a, c) < 0.5);
}
