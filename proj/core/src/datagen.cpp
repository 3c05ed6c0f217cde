#include "gcdro/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace gcdro {

namespace {

// Distinct streams per split so train/valid/test never share draws.
std::uint64_t split_seed(std::uint64_t seed, Split split) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(split)};
    std::uint64_t out = 0;
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Two-group spurious attribute data

void validate(const Table1Spec& spec) {
    if (spec.n_per_group < 1) throw Error(ErrorCode::InvalidSpec, "n_per_group must be at least 1");
    if (!(spec.feature_noise >= 0.0)) throw Error(ErrorCode::InvalidSpec, "feature_noise must be non-negative");
    if (!(spec.flip_fraction >= 0.0 && spec.flip_fraction < 0.5))
        throw Error(ErrorCode::InvalidSpec, "flip_fraction must lie in [0, 0.5)");
}

GeneratedData gen_table1(const Table1Spec& spec, Split split) {
    validate(spec);
    std::mt19937_64 rng(split_seed(spec.seed, split));
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution flip(spec.flip_fraction);
    std::normal_distribution<double> noise(0.0, 1.0);

    GeneratedData out;
    Dataset& ds = out.dataset;
    ds.num_classes = 2;
    ds.feature_dim = 2;
    ds.split = split;
    ds.examples.reserve(2 * spec.n_per_group);

    for (int g = 0; g < 2; ++g) {
        for (std::size_t i = 0; i < spec.n_per_group; ++i) {
            const int s = coin(rng) ? 1 : 0;
            int y = 0;
            if (g == 0)
                y = (s == 1) ? 1 : (coin(rng) ? 1 : 0);
            else
                y = (s == 0) ? 0 : (coin(rng) ? 1 : 0);
            double r = (y == 1) ? 1.0 : -1.0;
            if (flip(rng)) r = -r;
            LabeledExample ex;
            ex.features = {s + spec.feature_noise * noise(rng), r + spec.feature_noise * noise(rng)};
            ex.label = y;
            ex.attribute = s;
            ex.stable_id = static_cast<std::int64_t>(ds.examples.size());
            ds.examples.push_back(std::move(ex));
            out.imperfect.assignment.push_back(g);
        }
    }
    out.imperfect.layout = GroupLayout::from_assignment(out.imperfect.assignment, 2);
    out.clean = clean_partition(ds);
    ds = with_groups(ds, out.clean.assignment);
    return out;
}

// ---------------------------------------------------------------------------
// 2D blobs

int blobs_label(const Blobs2DSpec& spec, int subclass) {
    return spec.subclass_means.at(static_cast<std::size_t>(subclass))[0] > 0.0 ? 1 : 0;
}

int blobs_attribute(const Blobs2DSpec& spec, int subclass) {
    return spec.subclass_means.at(static_cast<std::size_t>(subclass))[1] > 0.0 ? 1 : 0;
}

void validate(const Blobs2DSpec& spec) {
    if (spec.minority_per_subclass < 1)
        throw Error(ErrorCode::InvalidSpec, "minority_per_subclass must be at least 1");
    if (spec.minority_per_subclass > spec.majority_per_subclass)
        throw Error(ErrorCode::InvalidSpec, "minority_per_subclass exceeds majority_per_subclass");
    const auto& c = spec.subclass_cov;
    if (c[1] != c[2]) throw Error(ErrorCode::InvalidSpec, "covariance must be symmetric");
    if (!(c[0] > 0.0) || !(c[0] * c[3] - c[1] * c[2] > 0.0))
        throw Error(ErrorCode::InvalidSpec, "covariance must be positive definite");
    std::set<std::pair<int, int>> cells;
    for (int s = 0; s < 4; ++s) cells.insert({blobs_attribute(spec, s), blobs_label(spec, s)});
    if (cells.size() != 4)
        throw Error(ErrorCode::InvalidSpec, "subclass means must occupy four distinct sign quadrants");
    if (blobs_label(spec, 0) != blobs_label(spec, 1) || blobs_label(spec, 2) != blobs_label(spec, 3))
        throw Error(ErrorCode::InvalidSpec, "subclasses 0,1 and 2,3 must share a class");
}

GeneratedData gen_blobs2d(const Blobs2DSpec& spec, Split split) {
    validate(spec);
    std::mt19937_64 rng(split_seed(spec.seed, split));
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto& c = spec.subclass_cov;
    const double l00 = std::sqrt(c[0]);
    const double l10 = c[2] / l00;
    const double l11 = std::sqrt(c[3] - l10 * l10);

    GeneratedData out;
    Dataset& ds = out.dataset;
    ds.num_classes = 2;
    ds.feature_dim = 2;
    ds.split = split;

    for (int s = 0; s < 4; ++s) {
        const bool minority = (s == 0 || s == 2);
        const std::size_t n = minority ? spec.minority_per_subclass : spec.majority_per_subclass;
        const auto& mean = spec.subclass_means[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < n; ++i) {
            const double z0 = normal(rng);
            const double z1 = normal(rng);
            LabeledExample ex;
            ex.features = {mean[0] + l00 * z0, mean[1] + l10 * z0 + l11 * z1};
            ex.label = blobs_label(spec, s);
            ex.attribute = blobs_attribute(spec, s);
            ex.stable_id = static_cast<std::int64_t>(ds.examples.size());
            ds.examples.push_back(std::move(ex));
        }
    }

    out.clean = clean_partition(ds);
    // Shape groups are the classes: each mixes a majority and a minority
    // subclass in fixed proportion, so no group reweighting changes P(a | y).
    MergeMap by_label;
    for (const auto& cell : out.clean.cells) by_label[cell] = cell.label;
    out.imperfect = merged_partition(ds, by_label);
    ds = with_groups(ds, out.clean.assignment);
    return out;
}

// ---------------------------------------------------------------------------
// Sequence task

void validate(const SeqTaskSpec& spec) {
    auto ordered = [](const std::array<int, 2>& r) { return r[0] <= r[1]; };
    if (spec.n_samples < 1) throw Error(ErrorCode::InvalidSpec, "n_samples must be at least 1");
    if (!ordered(spec.m_range) || spec.m_range[0] < 1) throw Error(ErrorCode::InvalidSpec, "bad m_range");
    if (!ordered(spec.chunk_len_range) || spec.chunk_len_range[0] < 2)
        throw Error(ErrorCode::InvalidSpec, "chunk_len_range must allow the two-character segment");
    if (spec.alphabet_size < 2 || spec.alphabet_size > 26)
        throw Error(ErrorCode::InvalidSpec, "alphabet_size must lie in [2, 26]");
    if (!ordered(spec.int_range) || spec.int_range[0] < 0)
        throw Error(ErrorCode::InvalidSpec, "bad int_range");
    if (spec.retry_cap < 1) throw Error(ErrorCode::InvalidSpec, "retry_cap must be positive");
    for (const auto& tok : spec.special_segment) {
        if (tok.size() != 1 || tok[0] < 'a' || tok[0] >= 'a' + spec.alphabet_size)
            throw Error(ErrorCode::InvalidSpec, "special segment must use alphabet letters");
    }
}

std::string_view to_string(SeqSplit split) {
    switch (split) {
    case SeqSplit::train: return "train";
    case SeqSplit::test_in: return "test_in";
    case SeqSplit::test_out: return "test_out";
    }
    return "train";
}

namespace {

int indicator(int c1, int c2) { return c2 > c1 ? c2 - c1 : 0; }

class SeqSampler {
public:
    SeqSampler(const SeqTaskSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

    SeqSample draw(SeqSplit split) {
        const int m = uniform(spec_.m_range[0], spec_.m_range[1]);
        std::vector<std::vector<std::string>> chunks(static_cast<std::size_t>(m));
        SeqSample s;
        s.split = split;
        s.c1.resize(static_cast<std::size_t>(m));
        s.c2.resize(static_cast<std::size_t>(m));

        const bool special = spec_.setting == SeqSetting::setting2 && split != SeqSplit::test_out;
        if (special) s.special_chunk = uniform(0, m - 1);

        for (int i = 0; i < m; ++i) {
            const bool is_special = s.special_chunk && *s.special_chunk == i;
            chunks[static_cast<std::size_t>(i)] = is_special ? special_chunk() : plain_chunk(special);
            draw_ints(s, i);
        }

        if (spec_.setting == SeqSetting::setting1) {
            // Last chunk: c2 > c1 for train and D_in, c2 <= c1 for D_out.
            const bool want_increase = split != SeqSplit::test_out;
            retry([&] {
                draw_ints(s, m - 1);
                return (s.c2.back() > s.c1.back()) == want_increase;
            });
        } else if (special) {
            const int j = *s.special_chunk;
            retry([&] {
                int rest = 0;
                for (int i = 0; i < m; ++i) {
                    if (i == j) continue;
                    draw_ints(s, i);
                    rest += indicator(s.c1[static_cast<std::size_t>(i)], s.c2[static_cast<std::size_t>(i)]);
                }
                return rest % 10 == 0;
            });
        }

        int total = 0;
        for (int i = 0; i < m; ++i) {
            const auto k = static_cast<std::size_t>(i);
            s.d.push_back(indicator(s.c1[k], s.c2[k]));
            total += s.d.back();
            s.tokens.push_back(std::to_string(s.c1[k]));
            s.tokens.insert(s.tokens.end(), chunks[k].begin(), chunks[k].end());
            s.tokens.push_back(std::to_string(s.c2[k]));
        }
        s.label = total % 10;
        return s;
    }

private:
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::string letter() { return std::string(1, static_cast<char>('a' + uniform(0, spec_.alphabet_size - 1))); }

    void draw_ints(SeqSample& s, int i) {
        s.c1[static_cast<std::size_t>(i)] = uniform(spec_.int_range[0], spec_.int_range[1]);
        s.c2[static_cast<std::size_t>(i)] = uniform(spec_.int_range[0], spec_.int_range[1]);
    }

    bool has_segment(const std::vector<std::string>& chunk) const {
        for (std::size_t i = 0; i + 1 < chunk.size(); ++i)
            if (chunk[i] == spec_.special_segment[0] && chunk[i + 1] == spec_.special_segment[1]) return true;
        return false;
    }

    // Ordinary chunks never carry the segment when a special chunk is planted.
    std::vector<std::string> plain_chunk(bool avoid_segment) {
        std::vector<std::string> chunk;
        retry([&] {
            chunk.clear();
            const int len = uniform(spec_.chunk_len_range[0], spec_.chunk_len_range[1]);
            for (int k = 0; k < len; ++k) chunk.push_back(letter());
            return !avoid_segment || !has_segment(chunk);
        });
        return chunk;
    }

    std::vector<std::string> special_chunk() {
        const int len = uniform(spec_.chunk_len_range[0], spec_.chunk_len_range[1]);
        std::vector<std::string> chunk;
        for (int k = 0; k < len; ++k) chunk.push_back(letter());
        const int pos = uniform(0, len - 2);
        chunk[static_cast<std::size_t>(pos)] = spec_.special_segment[0];
        chunk[static_cast<std::size_t>(pos + 1)] = spec_.special_segment[1];
        return chunk;
    }

    template <typename Attempt>
    void retry(Attempt&& attempt) {
        for (int tries = 0; tries < spec_.retry_cap; ++tries)
            if (attempt()) return;
        throw Error(ErrorCode::GenerationStalled,
                    "no valid sample after " + std::to_string(spec_.retry_cap) + " attempts (setting " +
                        std::string(spec_.setting == SeqSetting::setting1 ? "1" : "2") + ")");
    }

    const SeqTaskSpec& spec_;
    std::mt19937_64 rng_;
};

} // namespace

SeqTaskData gen_seq_task(const SeqTaskSpec& spec) {
    validate(spec);
    SeqTaskData out;
    SeqSampler train(spec, split_seed(spec.seed, Split::train));
    SeqSampler test_in(spec, split_seed(spec.seed, Split::valid));
    SeqSampler test_out(spec, split_seed(spec.seed, Split::test));
    for (std::size_t i = 0; i < spec.n_samples; ++i) out.train.push_back(train.draw(SeqSplit::train));
    for (std::size_t i = 0; i < spec.n_test; ++i) out.test_in.push_back(test_in.draw(SeqSplit::test_in));
    for (std::size_t i = 0; i < spec.n_test; ++i) out.test_out.push_back(test_out.draw(SeqSplit::test_out));
    return out;
}

int seq_label_from_tokens(const std::vector<std::string>& tokens) {
    auto is_int = [](const std::string& t) {
        return !t.empty() && std::all_of(t.begin(), t.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    };
    int total = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (!is_int(tokens[i])) throw Error(ErrorCode::InvalidArguments, "chunk must open with an integer");
        const int c1 = std::stoi(tokens[i]);
        std::size_t j = i + 1;
        while (j < tokens.size() && !is_int(tokens[j])) ++j;
        if (j == tokens.size() || j == i + 1)
            throw Error(ErrorCode::InvalidArguments, "chunk must contain letters and close with an integer");
        const int c2 = std::stoi(tokens[j]);
        total += c2 > c1 ? c2 - c1 : 0;
        i = j + 1;
    }
    if (tokens.empty()) throw Error(ErrorCode::InvalidArguments, "empty sequence");
    return total % 10;
}

std::string format_seq_line(const SeqSample& sample, SeqSetting setting) {
    std::string line;
    for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
        if (i) line += ' ';
        line += sample.tokens[i];
    }
    nlohmann::json meta;
    meta["setting"] = setting == SeqSetting::setting1 ? 1 : 2;
    meta["split"] = std::string(to_string(sample.split));
    meta["m"] = sample.c1.size();
    meta["c1"] = sample.c1;
    meta["c2"] = sample.c2;
    meta["d"] = sample.d;
    meta["special_chunk"] = sample.special_chunk ? nlohmann::json(*sample.special_chunk) : nlohmann::json(nullptr);
    line += '\t';
    line += std::to_string(sample.label);
    line += '\t';
    line += meta.dump();
    return line;
}

void save_seq_task(const std::string& path, const std::vector<SeqSample>& samples, SeqSetting setting) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    for (const auto& s : samples) out << format_seq_line(s, setting) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

} // namespace gcdro
