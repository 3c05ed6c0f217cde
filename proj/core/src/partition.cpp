#include "gcdro/partition.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>

namespace gcdro {

std::string cell_name(const Cell& cell) {
    return "a" + std::to_string(cell.attribute) + "_y" + std::to_string(cell.label);
}

std::string_view to_string(PartitionKind kind) {
    switch (kind) {
    case PartitionKind::clean: return "clean";
    case PartitionKind::merged: return "merged";
    case PartitionKind::kmeans: return "kmeans";
    case PartitionKind::generator: return "generator";
    }
    return "clean";
}

PartitionKind partition_kind_from_string(std::string_view name) {
    if (name == "clean") return PartitionKind::clean;
    if (name == "merged") return PartitionKind::merged;
    if (name == "kmeans") return PartitionKind::kmeans;
    if (name == "generator") return PartitionKind::generator;
    throw Error(ErrorCode::InvalidArguments, "unknown partition kind '" + std::string(name) + "'");
}

namespace {

Cell cell_of(const LabeledExample& ex) {
    if (!ex.attribute)
        throw Error(ErrorCode::MissingAttribute, "example " + std::to_string(ex.stable_id) + " has no attribute");
    return Cell{*ex.attribute, ex.label};
}

} // namespace

Partition clean_partition(const Dataset& ds) {
    std::set<Cell> observed;
    for (const auto& ex : ds.examples) observed.insert(cell_of(ex));

    MergeMap index;
    Partition out;
    for (const auto& cell : observed) {
        index.emplace(cell, static_cast<int>(out.cells.size()));
        out.cells.push_back(cell);
    }
    out.assignment.reserve(ds.size());
    for (const auto& ex : ds.examples) out.assignment.push_back(index.at(cell_of(ex)));
    out.layout = GroupLayout::from_assignment(out.assignment, static_cast<int>(out.cells.size()));
    return out;
}

Partition merged_partition(const Dataset& ds, const MergeMap& merge_map) {
    Partition out;
    out.assignment.reserve(ds.size());
    int m = 0;
    for (const auto& ex : ds.examples) {
        auto cell = cell_of(ex);
        auto it = merge_map.find(cell);
        if (it == merge_map.end())
            throw Error(ErrorCode::IncompleteMergeMap, "merge map does not cover cell " + cell_name(cell));
        if (it->second < 0) throw Error(ErrorCode::InvalidArguments, "negative group id in merge map");
        out.assignment.push_back(it->second);
        m = std::max(m, it->second + 1);
    }
    // from_assignment rejects empty groups, i.e. ids that are not dense.
    out.layout = GroupLayout::from_assignment(out.assignment, m);
    return out;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

using Matrix = std::vector<std::vector<double>>;

std::size_t nearest(std::span<const double> p, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = squared_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Matrix seed_plus_plus(std::span<const std::vector<double>> points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = points.size();
    Matrix centroids;
    std::vector<bool> chosen(n, false);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t idx = first(rng);
    centroids.push_back(points[idx]);
    chosen[idx] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (centroids.size() < k) {
        double total = 0.0;
        for (double d : d2) total += d;
        std::size_t pick = n;
        if (total > 0.0) {
            double r = unit(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                r -= d2[i];
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) { // rounding left r slightly positive
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        } else {
            // Every point coincides with a centroid: take the lowest unused index.
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
        }
        chosen[pick] = true;
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
    return centroids;
}

void assign_nearest(std::span<const std::vector<double>> points, const Matrix& centroids, std::vector<int>& assign) {
    for (std::size_t i = 0; i < points.size(); ++i) assign[i] = static_cast<int>(nearest(points[i], centroids));
}

// Moves the point farthest from its centroid (within a cluster of size > 1)
// into each empty cluster.
void repair_empty(std::span<const std::vector<double>> points, Matrix& centroids, std::vector<int>& assign) {
    const std::size_t k = centroids.size();
    std::vector<std::size_t> counts(k, 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = points.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto owner = static_cast<std::size_t>(assign[i]);
            if (counts[owner] < 2) continue;
            double d = squared_distance(points[i], centroids[owner]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        --counts[static_cast<std::size_t>(assign[far])];
        assign[far] = static_cast<int>(c);
        counts[c] = 1;
        centroids[c] = points[far];
    }
}

void update_centroids(std::span<const std::vector<double>> points, const std::vector<int>& assign, Matrix& centroids) {
    const std::size_t d = points.front().size();
    Matrix sums(centroids.size(), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto c = static_cast<std::size_t>(assign[i]);
        ++counts[c];
        for (std::size_t j = 0; j < d; ++j) sums[c][j] += points[i][j];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
}

double objective(std::span<const std::vector<double>> points, const std::vector<int>& assign, const Matrix& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        s += squared_distance(points[i], centroids[static_cast<std::size_t>(assign[i])]);
    return s;
}

} // namespace

KMeansResult kmeans(std::span<const std::vector<double>> points, int k, int iters, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorCode::InvalidArguments, "k must be at least 1");
    if (iters < 1) throw Error(ErrorCode::InvalidArguments, "iters must be at least 1");
    if (points.size() < static_cast<std::size_t>(k))
        throw Error(ErrorCode::TooFewPoints,
                    std::to_string(points.size()) + " points for " + std::to_string(k) + " clusters");
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw Error(ErrorCode::ShapeError, "points have differing dimensions");

    std::mt19937_64 rng(seed);
    KMeansResult result;
    result.centroids = seed_plus_plus(points, static_cast<std::size_t>(k), rng);

    std::vector<int> assign(points.size(), 0);
    assign_nearest(points, result.centroids, assign);
    repair_empty(points, result.centroids, assign);
    update_centroids(points, assign, result.centroids);
    result.objective_history.push_back(objective(points, assign, result.centroids));

    std::vector<int> next(points.size(), 0);
    for (int it = 0; it < iters; ++it) {
        assign_nearest(points, result.centroids, next);
        repair_empty(points, result.centroids, next);
        ++result.iterations;
        if (next == assign) {
            result.converged = true;
            break;
        }
        assign.swap(next);
        update_centroids(points, assign, result.centroids);
        result.objective_history.push_back(objective(points, assign, result.centroids));
    }

    result.partition.assignment = std::move(assign);
    result.partition.layout = GroupLayout::from_assignment(result.partition.assignment, k);
    return result;
}

Partition kmeans_partition(std::span<const std::vector<double>> points, const PartitionSpec& spec) {
    return kmeans(points, spec.k, spec.iters, spec.seed).partition;
}

std::vector<std::vector<double>> feature_rows(const Dataset& ds) {
    std::vector<std::vector<double>> rows;
    rows.reserve(ds.size());
    for (const auto& ex : ds.examples) rows.push_back(ex.features);
    return rows;
}

Partition make_partition(const Dataset& ds, const PartitionSpec& spec) {
    switch (spec.kind) {
    case PartitionKind::clean: return clean_partition(ds);
    case PartitionKind::merged: return merged_partition(ds, spec.merge_map);
    case PartitionKind::kmeans: {
        auto rows = feature_rows(ds);
        return kmeans_partition(rows, spec);
    }
    case PartitionKind::generator: break;
    }
    throw Error(ErrorCode::InvalidArguments, "generator partitions come from the data generator");
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::ShapeError, "label vectors differ in length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, c] : joint) index += pairs(c);
    for (const auto& [key, c] : rows) sum_rows += pairs(c);
    for (const auto& [key, c] : cols) sum_cols += pairs(c);
    const double total = pairs(static_cast<double>(n));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0; // both partitions trivial
    return (index - expected) / (max_index - expected);
}

} // namespace gcdro
