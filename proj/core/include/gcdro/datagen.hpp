#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcdro/core.hpp"
#include "gcdro/partition.hpp"

namespace gcdro {

/// A generated dataset together with its clean (attribute, label) partition
/// and the generator's imperfect grouping. The dataset's group field holds
/// the clean assignment.
struct GeneratedData {
    Dataset dataset;
    Partition clean;
    Partition imperfect;
};

// ---------------------------------------------------------------------------
// Two-group imperfect partition over a binary spurious attribute S.
//
//            G1: P(Y=0|S=0)=0.5  P(Y=0|S=1)=0
//            G2: P(Y=0|S=0)=1    P(Y=0|S=1)=0.5
//
// Features are [S + e, r + e'] where r = +1 for Y = 1 and -1 for Y = 0, with r
// flipped for a `flip_fraction` of examples.

struct Table1Spec {
    std::size_t n_per_group = 1000;
    std::uint64_t seed = 0;
    double feature_noise = 0.1;
    double flip_fraction = 0.05;
};

void validate(const Table1Spec& spec);

/// Attribute = S, imperfect groups are {G1, G2} in that order.
GeneratedData gen_table1(const Table1Spec& spec, Split split = Split::train);

// ---------------------------------------------------------------------------
// Four Gaussian subclasses in the plane. Subclasses 0 and 2 are the minority
// ones; the label is the sign of the horizontal mean (1 if positive), the
// attribute the sign of the vertical mean.

struct Blobs2DSpec {
    std::size_t majority_per_subclass = 500;
    std::size_t minority_per_subclass = 25;
    std::array<std::array<double, 2>, 4> subclass_means{{{2.0, 2.0}, {2.0, -2.0}, {-2.0, -2.0}, {-2.0, 2.0}}};
    std::array<double, 4> subclass_cov{0.25, 0.0, 0.0, 0.25}; // row-major 2x2
    std::uint64_t seed = 0;
};

void validate(const Blobs2DSpec& spec);

int blobs_label(const Blobs2DSpec& spec, int subclass);
int blobs_attribute(const Blobs2DSpec& spec, int subclass);

/// Imperfect groups are the classes, so each group holds one majority and one
/// minority subclass.
GeneratedData gen_blobs2d(const Blobs2DSpec& spec, Split split = Split::train);

// ---------------------------------------------------------------------------
// Token-sequence task: m chunks of letters, each wrapped by integers c1 and c2;
// d = c2 - c1 if c2 > c1 else 0 and y = (sum d) mod 10.

enum class SeqSetting { setting1, setting2 };

struct SeqTaskSpec {
    SeqSetting setting = SeqSetting::setting1;
    std::size_t n_samples = 10000;
    std::size_t n_test = 1000;
    std::array<int, 2> m_range{3, 6};
    std::array<int, 2> chunk_len_range{3, 5};
    int alphabet_size = 26;
    std::array<int, 2> int_range{1, 10};
    std::array<std::string, 2> special_segment{"a", "b"};
    std::uint64_t seed = 0;
    int retry_cap = 1000;
};

void validate(const SeqTaskSpec& spec);

enum class SeqSplit { train, test_in, test_out };

std::string_view to_string(SeqSplit split);

struct SeqSample {
    std::vector<std::string> tokens;
    int label = 0;
    std::vector<int> c1, c2, d;
    std::optional<int> special_chunk;
    SeqSplit split = SeqSplit::train;
};

struct SeqTaskData {
    std::vector<SeqSample> train;
    std::vector<SeqSample> test_in;
    std::vector<SeqSample> test_out;
};

SeqTaskData gen_seq_task(const SeqTaskSpec& spec);

/// Recomputes the label from tokens alone. Throws InvalidArguments on a
/// malformed sequence.
int seq_label_from_tokens(const std::vector<std::string>& tokens);

/// One line: tokens joined by spaces, TAB, label, TAB, metadata JSON.
std::string format_seq_line(const SeqSample& sample, SeqSetting setting);

void save_seq_task(const std::string& path, const std::vector<SeqSample>& samples, SeqSetting setting);

} // namespace gcdro
