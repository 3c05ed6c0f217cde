#include <set>

#include "doctest.h"
#include "gcdro/datagen.hpp"
#include "gcdro/eval.hpp"
#include "gcdro/trainer.hpp"
#include "helpers.hpp"

using namespace gcdro;

namespace {

// P(Y = 0 | S = s, G = g) from an imperfect assignment.
double p_y0(const GeneratedData& gen, int g, int s) {
    std::size_t n = 0, zeros = 0;
    for (std::size_t i = 0; i < gen.dataset.size(); ++i) {
        const auto& ex = gen.dataset.examples[i];
        if (gen.imperfect.assignment[i] != g || *ex.attribute != s) continue;
        ++n;
        zeros += ex.label == 0 ? 1 : 0;
    }
    return static_cast<double>(zeros) / static_cast<double>(n);
}

} // namespace

TEST_CASE("table1 conditionals over 20k draws") {
    Table1Spec spec;
    spec.n_per_group = 10000;
    const auto gen = gen_table1(spec);
    CHECK(gen.dataset.size() == 20000);
    CHECK(p_y0(gen, 0, 1) == 0.0);
    CHECK(p_y0(gen, 1, 0) == 1.0);
    CHECK(std::abs(p_y0(gen, 0, 0) - 0.5) <= 0.02);
    CHECK(std::abs(p_y0(gen, 1, 1) - 0.5) <= 0.02);
}

TEST_CASE("table1 groups are equal in size and the clean partition has four cells") {
    const auto gen = gen_table1({500, 1, 0.1, 0.05});
    CHECK(gen.imperfect.layout.sizes() == std::vector<std::size_t>{500, 500});
    CHECK(gen.clean.layout.m() == 4);
    CHECK(validate_dataset(gen.dataset, gen.clean.layout).empty());
}

TEST_CASE("table1 output is a pure function of the seed and split") {
    const auto a = gen_table1({200, 9, 0.1, 0.05}, Split::valid);
    const auto b = gen_table1({200, 9, 0.1, 0.05}, Split::valid);
    const auto c = gen_table1({200, 9, 0.1, 0.05}, Split::test);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        same = same && a.dataset.examples[i].features == b.dataset.examples[i].features;
        differs = differs || a.dataset.examples[i].features != c.dataset.examples[i].features;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("table1 rejects an empty group and negative noise") {
    CHECK_THROWS_AS(gen_table1({0, 0, 0.1, 0.05}), Error);
    CHECK_THROWS_AS(gen_table1({10, 0, -0.1, 0.05}), Error);
}

TEST_CASE("blobs default geometry is separable along the horizontal axis") {
    const auto gen = gen_blobs2d({});
    std::vector<std::size_t> n(4, 0), ok(4, 0);
    for (std::size_t i = 0; i < gen.dataset.size(); ++i) {
        const auto& ex = gen.dataset.examples[i];
        const auto g = static_cast<std::size_t>(ex.group);
        ++n[g];
        ok[g] += (ex.features[0] > 0.0 ? 1 : 0) == ex.label ? 1 : 0;
    }
    for (std::size_t g = 0; g < 4; ++g) CHECK(static_cast<double>(ok[g]) / static_cast<double>(n[g]) >= 0.99);
    CHECK(gen.dataset.size() == 2 * 500 + 2 * 25);
}

TEST_CASE("blobs shape groups are the classes") {
    const auto gen = gen_blobs2d({});
    CHECK(gen.imperfect.layout.m() == 2);
    for (std::size_t i = 0; i < gen.dataset.size(); ++i)
        CHECK(gen.imperfect.assignment[i] == gen.dataset.examples[i].label);
    CHECK(gen.imperfect.layout.sizes() == std::vector<std::size_t>{525, 525});
}

TEST_CASE("blobs with balanced subclasses train to a good worst subclass") {
    Blobs2DSpec spec;
    spec.minority_per_subclass = spec.majority_per_subclass;
    const auto train = gen_blobs2d(spec, Split::train);
    const auto valid = gen_blobs2d(spec, Split::valid);
    TrainConfig config;
    config.epochs = 10;
    const auto record = gcdro::train(train.dataset, train.clean.layout, valid.dataset, config);
    CHECK(record.epochs.back().valid.robust >= 0.95);
}

TEST_CASE("blobs rejects bad specs") {
    Blobs2DSpec spec;
    spec.minority_per_subclass = 0;
    CHECK_THROWS_AS(gen_blobs2d(spec), Error);
    spec = {};
    spec.minority_per_subclass = spec.majority_per_subclass + 1;
    CHECK_THROWS_AS(gen_blobs2d(spec), Error);
    spec = {};
    spec.subclass_cov = {0.25, 0.3, 0.3, 0.25};
    CHECK_THROWS_AS(gen_blobs2d(spec), Error);
    spec = {};
    spec.subclass_cov = {0.25, 0.1, 0.0, 0.25};
    CHECK_THROWS_AS(gen_blobs2d(spec), Error);
}

TEST_CASE("seq task labels follow the rule oracle") {
    for (auto setting : {SeqSetting::setting1, SeqSetting::setting2}) {
        SeqTaskSpec spec;
        spec.setting = setting;
        spec.n_samples = 2000;
        spec.n_test = 500;
        const auto data = gen_seq_task(spec);
        for (const auto* split : {&data.train, &data.test_in, &data.test_out})
            for (const auto& s : *split) {
                REQUIRE(seq_label_from_tokens(s.tokens) == s.label);
                CHECK(s.c1.size() >= 3);
                CHECK(s.c1.size() <= 6);
            }
    }
}

TEST_CASE("seq task chunks respect the length, alphabet and integer ranges") {
    SeqTaskSpec spec;
    spec.n_samples = 1000;
    const auto data = gen_seq_task(spec);
    for (const auto& s : data.train) {
        std::size_t letters = 0, chunks = 0;
        for (const auto& tok : s.tokens) {
            if (std::isdigit(static_cast<unsigned char>(tok[0]))) {
                const int v = std::stoi(tok);
                CHECK(v >= 1);
                CHECK(v <= 10);
                if (letters > 0) {
                    CHECK(letters >= 3);
                    CHECK(letters <= 5);
                    letters = 0;
                    ++chunks;
                }
            } else {
                CHECK(tok.size() == 1);
                CHECK(tok[0] >= 'a');
                CHECK(tok[0] <= 'z');
                ++letters;
            }
        }
        CHECK(chunks == s.c1.size());
    }
}

TEST_CASE("seq setting 1 splits on the last chunk") {
    SeqTaskSpec spec;
    spec.n_samples = 3000;
    spec.n_test = 3000;
    const auto data = gen_seq_task(spec);
    for (const auto& s : data.train) CHECK(s.c2.back() > s.c1.back());
    for (const auto& s : data.test_in) CHECK(s.c2.back() > s.c1.back());
    for (const auto& s : data.test_out) CHECK(s.c2.back() <= s.c1.back());
}

TEST_CASE("seq setting 2 ties the label to the special chunk") {
    SeqTaskSpec spec;
    spec.setting = SeqSetting::setting2;
    spec.n_samples = 3000;
    spec.n_test = 300;
    const auto data = gen_seq_task(spec);
    for (const auto& s : data.train) {
        REQUIRE(s.special_chunk.has_value());
        CHECK(s.label == s.d[static_cast<std::size_t>(*s.special_chunk)]);
    }
    for (const auto& s : data.test_out) CHECK_FALSE(s.special_chunk.has_value());
}

TEST_CASE("seq_label_from_tokens rejects malformed sequences") {
    CHECK_THROWS_AS(seq_label_from_tokens({}), Error);
    CHECK_THROWS_AS(seq_label_from_tokens({"a", "b", "3"}), Error);
    CHECK_THROWS_AS(seq_label_from_tokens({"1", "a", "b"}), Error);
    CHECK_THROWS_AS(seq_label_from_tokens({"1", "2"}), Error);
    CHECK(seq_label_from_tokens({"1", "a", "b", "c", "9", "2", "x", "y", "z", "5"}) == 1);
}

TEST_CASE("seq task stalls with a clear error when no sample can satisfy setting 1") {
    SeqTaskSpec spec;
    spec.int_range = {4, 4};
    spec.n_samples = 10;
    spec.retry_cap = 5;
    try {
        gen_seq_task(spec);
        FAIL("expected GenerationStalled");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GenerationStalled);
    }
}
