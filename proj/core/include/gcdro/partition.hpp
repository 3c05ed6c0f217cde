#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gcdro/core.hpp"

namespace gcdro {

/// One (attribute, label) cell of a clean partition.
struct Cell {
    int attribute = 0;
    int label = 0;
    auto operator<=>(const Cell&) const = default;
};

std::string cell_name(const Cell& cell); // "a{i}_y{j}"

/// A total group assignment over a dataset, in dataset order.
struct Partition {
    std::vector<int> assignment;
    GroupLayout layout;
    // For cell-based partitions: the cell each group was built from (clean) or
    // empty otherwise.
    std::vector<Cell> cells;
};

enum class PartitionKind { clean, merged, kmeans, generator };

std::string_view to_string(PartitionKind kind);
PartitionKind partition_kind_from_string(std::string_view name);

using MergeMap = std::map<Cell, int>;

struct PartitionSpec {
    PartitionKind kind = PartitionKind::clean;
    MergeMap merge_map; // merged only
    int k = 8;          // kmeans only
    int iters = 100;
    std::uint64_t seed = 0;
};

/// Group id = rank of (attribute, label) among observed cells.
Partition clean_partition(const Dataset& ds);

/// Group id = merge_map[(attribute, label)]. Ids must be dense in [0, m).
Partition merged_partition(const Dataset& ds, const MergeMap& merge_map);

struct KMeansResult {
    Partition partition;
    std::vector<std::vector<double>> centroids;
    // Sum of squared distances after the initial assignment and after every
    // Lloyd iteration.
    std::vector<double> objective_history;
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding and farthest-point repair of empty
/// clusters. Nearest-centroid ties go to the lowest index.
KMeansResult kmeans(std::span<const std::vector<double>> points, int k, int iters, std::uint64_t seed);

Partition kmeans_partition(std::span<const std::vector<double>> points, const PartitionSpec& spec);

/// Feature vectors of every example, in dataset order.
std::vector<std::vector<double>> feature_rows(const Dataset& ds);

/// Dispatches on spec.kind. `generator` is not handled here (the generator
/// owns that assignment) and throws InvalidArguments.
Partition make_partition(const Dataset& ds, const PartitionSpec& spec);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

} // namespace gcdro
