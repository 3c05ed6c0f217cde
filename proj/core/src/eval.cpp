#include "gcdro/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "gcdro/trainer.hpp"

namespace gcdro {

GroupMetrics group_accuracies(std::span<const int> predictions, const Dataset& ds, const GroupLayout& layout) {
    if (predictions.size() != ds.size())
        throw Error(ErrorCode::ShapeError, "expected " + std::to_string(ds.size()) + " predictions, got " +
                                               std::to_string(predictions.size()));
    const auto m = static_cast<std::size_t>(layout.m());
    GroupMetrics out;
    out.counts.assign(m, 0);
    out.correct.assign(m, 0);
    std::size_t total_correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int g = ds.examples[i].group;
        if (g < 0 || static_cast<std::size_t>(g) >= m)
            throw Error(ErrorCode::ShapeError, "example group " + std::to_string(g) + " outside layout");
        const bool hit = predictions[i] == ds.examples[i].label;
        ++out.counts[static_cast<std::size_t>(g)];
        out.correct[static_cast<std::size_t>(g)] += hit ? 1 : 0;
        total_correct += hit ? 1 : 0;
    }
    out.accuracy.assign(m, 0.0);
    out.robust = 1.0;
    bool any = false;
    for (std::size_t g = 0; g < m; ++g) {
        if (out.counts[g] == 0) continue; // an empty group has no accuracy to report
        out.accuracy[g] = static_cast<double>(out.correct[g]) / static_cast<double>(out.counts[g]);
        out.robust = any ? std::min(out.robust, out.accuracy[g]) : out.accuracy[g];
        any = true;
    }
    if (!any) out.robust = 0.0;
    out.average = ds.size() ? static_cast<double>(total_correct) / static_cast<double>(ds.size()) : 0.0;
    return out;
}

MergedRobust robust_accuracy_merged(const GroupMetrics& metrics, std::size_t threshold) {
    MergedRobust out;
    std::size_t pooled_count = 0, pooled_correct = 0;
    bool any = false;
    for (std::size_t g = 0; g < metrics.counts.size(); ++g) {
        if (metrics.counts[g] == 0) continue;
        if (metrics.counts[g] < threshold) {
            out.pooled_groups.push_back(static_cast<int>(g));
            pooled_count += metrics.counts[g];
            pooled_correct += metrics.correct[g];
            continue;
        }
        out.robust = any ? std::min(out.robust, metrics.accuracy[g]) : metrics.accuracy[g];
        any = true;
        ++out.reported_groups;
    }
    if (pooled_count > 0) {
        const double pooled = static_cast<double>(pooled_correct) / static_cast<double>(pooled_count);
        out.robust = any ? std::min(out.robust, pooled) : pooled;
        ++out.reported_groups;
    }
    return out;
}

GroupMetrics evaluate_groups(std::span<const int> predictions, const Dataset& ds, const GroupLayout& layout,
                             std::size_t merge_threshold) {
    GroupMetrics metrics = group_accuracies(predictions, ds, layout);
    auto merged = robust_accuracy_merged(metrics, merge_threshold);
    metrics.robust = merged.robust;
    metrics.pooled_groups = std::move(merged.pooled_groups);
    return metrics;
}

Heatmap weight_heatmap(const RunRecord& run, const Partition& clean) {
    return weight_heatmap(run.applied_weights, clean);
}

Heatmap weight_heatmap(std::span<const AppliedWeights> epochs, const Partition& clean) {
    if (epochs.empty()) throw Error(ErrorCode::InsufficientRecord, "run kept no applied-weight log");
    const std::size_t n = clean.assignment.size();
    const auto cells = static_cast<std::size_t>(clean.layout.m());

    Heatmap out;
    for (std::size_t c = 0; c < cells; ++c)
        out.columns.push_back(c < clean.cells.size() ? cell_name(clean.cells[c]) : "g" + std::to_string(c));

    std::vector<double> all_sum(cells, 0.0);
    std::vector<double> all_count(cells, 0.0);
    for (const auto& epoch : epochs) {
        if (epoch.sum.size() != n || epoch.count.size() != n)
            throw Error(ErrorCode::InsufficientRecord, "weight log does not cover the clean assignment");
        std::vector<double> sum(cells, 0.0), count(cells, 0.0);
        for (std::size_t id = 0; id < n; ++id) {
            const auto c = static_cast<std::size_t>(clean.assignment[id]);
            sum[c] += epoch.sum[id];
            count[c] += epoch.count[id];
        }
        std::vector<double> row(cells, 0.0);
        for (std::size_t c = 0; c < cells; ++c) {
            row[c] = count[c] > 0 ? sum[c] / count[c] : 0.0;
            all_sum[c] += sum[c];
            all_count[c] += count[c];
        }
        out.epochs.push_back(std::move(row));
    }
    out.summary.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) out.summary[c] = all_count[c] > 0 ? all_sum[c] / all_count[c] : 0.0;
    return out;
}

std::string heatmap_csv(const Heatmap& heatmap) {
    std::ostringstream out;
    out << "epoch";
    for (const auto& c : heatmap.columns) out << ',' << c;
    out << '\n';
    auto row = [&](const std::string& label, const std::vector<double>& values) {
        out << label;
        char buf[32];
        for (double v : values) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    };
    for (std::size_t e = 0; e < heatmap.epochs.size(); ++e) row(std::to_string(e + 1), heatmap.epochs[e]);
    row("all", heatmap.summary);
    return out.str();
}

} // namespace gcdro
