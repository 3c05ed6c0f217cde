#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcdro/error.hpp"

namespace gcdro {

// Tolerances for simplex checks. The tight one applies to short vectors.
inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kSmallSimplexTolerance = 1e-12;

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

struct LabeledExample {
    std::vector<double> features;
    int label = 0;
    std::optional<int> attribute;
    int group = 0;
    std::int64_t stable_id = 0;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    int num_classes = 2;
    int feature_dim = 0;
    Split split = Split::train;

    std::size_t size() const noexcept { return examples.size(); }
    // Largest group index + 1, or 0 for an empty dataset.
    int group_count() const;
};

/// Per-group sizes and the empirical group prior n_i / N.
class GroupLayout {
public:
    GroupLayout() = default;

    /// Throws InvalidArguments if any size is zero or the list is empty.
    static GroupLayout from_sizes(std::vector<std::size_t> sizes);

    /// Counts each group id in [0, m). Empty groups are an error.
    static GroupLayout from_assignment(std::span<const int> groups, int m);

    /// Layout of the dataset's materialized group field.
    static GroupLayout from_dataset(const Dataset& ds);

    int m() const noexcept { return static_cast<int>(sizes_.size()); }
    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t size(int g) const { return sizes_.at(static_cast<std::size_t>(g)); }
    std::size_t total() const noexcept { return total_; }
    const std::vector<double>& prior() const noexcept { return prior_; }

    bool operator==(const GroupLayout&) const = default;

private:
    std::vector<std::size_t> sizes_;
    std::size_t total_ = 0;
    std::vector<double> prior_;
};

/// Non-negative vector summing to one.
class SimplexVector {
public:
    SimplexVector() = default;

    /// Validates entries >= 0 and sum within tolerance of 1.
    explicit SimplexVector(std::vector<double> values, double tolerance = kSimplexTolerance);

    static SimplexVector uniform(std::size_t n);

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

/// v / sum(v). Throws InvalidDistribution on negative entries or zero mass.
SimplexVector normalize_simplex(std::span<const double> v);

/// True if entries are non-negative and sum to one within `tolerance`.
bool is_simplex(std::span<const double> v, double tolerance = kSimplexTolerance);

enum class IssueKind {
    label_out_of_range,
    group_out_of_range,
    attribute_out_of_range,
    feature_dim_mismatch,
    duplicate_id,
    id_out_of_range,
    size_mismatch,
    group_count_mismatch,
};

std::string_view to_string(IssueKind kind);

struct ValidationIssue {
    IssueKind kind;
    std::int64_t stable_id = -1; // -1 when the issue is not tied to an example
    int group = -1;
    std::string detail;
};

/// Lists every broken invariant of `ds` against `layout`. Empty means consistent.
std::vector<ValidationIssue> validate_dataset(const Dataset& ds, const GroupLayout& layout);

/// Group field of every example, in dataset order.
std::vector<int> group_assignment(const Dataset& ds);

/// Copy of `ds` with each example's group replaced by assignment[i].
Dataset with_groups(const Dataset& ds, std::span<const int> assignment);

// CSV with header id,group,attribute,label,f0,...,f{d-1}. Empty attribute = absent.
void write_dataset_csv(std::ostream& out, const Dataset& ds);
Dataset read_dataset_csv(std::istream& in, int num_classes, Split split);
void save_dataset_csv(const std::string& path, const Dataset& ds);
Dataset load_dataset_csv(const std::string& path, int num_classes, Split split);

} // namespace gcdro
