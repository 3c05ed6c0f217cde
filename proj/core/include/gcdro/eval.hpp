#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcdro/core.hpp"
#include "gcdro/partition.hpp"

namespace gcdro {

struct GroupMetrics {
    std::vector<double> accuracy;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> correct;
    double robust = 0.0;  // min over reported groups (after merging, if any)
    double average = 0.0; // overall accuracy
    // Groups pooled by robust_accuracy_merged; empty when nothing was merged.
    std::vector<int> pooled_groups;
};

/// Exact per-group accuracy of `predictions` (dataset order) under `layout`,
/// with groups read from the examples.
GroupMetrics group_accuracies(std::span<const int> predictions, const Dataset& ds, const GroupLayout& layout);

struct MergedRobust {
    double robust = 0.0;
    std::vector<int> pooled_groups;
    std::size_t reported_groups = 0;
};

/// Pools every group with fewer than `threshold` examples into one group whose
/// accuracy is computed over the pooled examples; robust accuracy is the
/// minimum over surviving groups and the pool.
MergedRobust robust_accuracy_merged(const GroupMetrics& metrics, std::size_t threshold);

/// group_accuracies followed by merging; `robust` and `pooled_groups` are
/// filled from the merged result.
GroupMetrics evaluate_groups(std::span<const int> predictions, const Dataset& ds, const GroupLayout& layout,
                             std::size_t merge_threshold);

/// Weights actually applied in gradient steps during one epoch, accumulated
/// per training stable id.
struct AppliedWeights {
    std::vector<double> sum;
    std::vector<std::uint32_t> count;
};

struct Heatmap {
    std::vector<std::string> columns; // a{i}_y{j}
    std::vector<std::vector<double>> epochs;
    std::vector<double> summary; // mean over every application in the run
};

struct RunRecord;

/// Mean applied weight per (epoch, clean cell). `clean.assignment` is indexed
/// by training stable id. Throws InsufficientRecord if
/// the run kept no weight log.
Heatmap weight_heatmap(const RunRecord& run, const Partition& clean);
Heatmap weight_heatmap(std::span<const AppliedWeights> epochs, const Partition& clean);

std::string heatmap_csv(const Heatmap& heatmap);

} // namespace gcdro
