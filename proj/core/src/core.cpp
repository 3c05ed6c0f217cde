#include "gcdro/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace gcdro {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidArguments: return "InvalidArguments";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::Diverged: return "DivergedError";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidStepSize: return "InvalidStepSize";
    case ErrorCode::InvalidObservation: return "InvalidObservation";
    case ErrorCode::DegenerateGroupPrior: return "DegenerateGroupPrior";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::IncompleteMergeMap: return "IncompleteMergeMap";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::GenerationStalled: return "GenerationStalled";
    case ErrorCode::NoCheckpoints: return "NoCheckpoints";
    case ErrorCode::InsufficientRecord: return "InsufficientRecord";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
    }
    return "UnknownError";
}

std::string_view to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "valid") return Split::valid;
    if (name == "test") return Split::test;
    throw Error(ErrorCode::InvalidArguments, "unknown split '" + std::string(name) + "'");
}

int Dataset::group_count() const {
    int m = 0;
    for (const auto& ex : examples) m = std::max(m, ex.group + 1);
    return m;
}

// ---------------------------------------------------------------------------
// GroupLayout

GroupLayout GroupLayout::from_sizes(std::vector<std::size_t> sizes) {
    if (sizes.empty()) throw Error(ErrorCode::InvalidArguments, "layout needs at least one group");
    GroupLayout layout;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (sizes[g] == 0)
            throw Error(ErrorCode::InvalidArguments, "group " + std::to_string(g) + " is empty");
    }
    layout.total_ = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    layout.prior_.reserve(sizes.size());
    for (auto n : sizes)
        layout.prior_.push_back(static_cast<double>(n) / static_cast<double>(layout.total_));
    layout.sizes_ = std::move(sizes);
    return layout;
}

GroupLayout GroupLayout::from_assignment(std::span<const int> groups, int m) {
    if (m < 1) throw Error(ErrorCode::InvalidArguments, "group count must be positive");
    std::vector<std::size_t> sizes(static_cast<std::size_t>(m), 0);
    for (int g : groups) {
        if (g < 0 || g >= m)
            throw Error(ErrorCode::InvalidArguments, "group index " + std::to_string(g) + " outside [0, " +
                                                         std::to_string(m) + ")");
        ++sizes[static_cast<std::size_t>(g)];
    }
    return from_sizes(std::move(sizes));
}

GroupLayout GroupLayout::from_dataset(const Dataset& ds) {
    auto groups = group_assignment(ds);
    return from_assignment(groups, ds.group_count());
}

// ---------------------------------------------------------------------------
// Simplex

bool is_simplex(std::span<const double> v, double tolerance) {
    if (v.empty()) return false;
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x)) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tolerance;
}

SimplexVector::SimplexVector(std::vector<double> values, double tolerance) : values_(std::move(values)) {
    if (!is_simplex(values_, tolerance))
        throw Error(ErrorCode::InvalidDistribution, "vector is not on the probability simplex");
}

SimplexVector SimplexVector::uniform(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidDistribution, "empty simplex");
    return SimplexVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SimplexVector normalize_simplex(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::InvalidDistribution, "negative or non-finite entry");
        sum += x;
    }
    if (!(sum > 0.0)) throw Error(ErrorCode::InvalidDistribution, "vector has no mass");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= sum;
    return SimplexVector(std::move(out));
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(IssueKind kind) {
    switch (kind) {
    case IssueKind::label_out_of_range: return "label index out of range";
    case IssueKind::group_out_of_range: return "group index out of range";
    case IssueKind::attribute_out_of_range: return "attribute index out of range";
    case IssueKind::feature_dim_mismatch: return "feature dimension mismatch";
    case IssueKind::duplicate_id: return "duplicate stable id";
    case IssueKind::id_out_of_range: return "stable id out of range";
    case IssueKind::size_mismatch: return "size mismatch";
    case IssueKind::group_count_mismatch: return "group count mismatch";
    }
    return "unknown";
}

std::vector<ValidationIssue> validate_dataset(const Dataset& ds, const GroupLayout& layout) {
    std::vector<ValidationIssue> issues;
    const int m = layout.m();
    const auto n = static_cast<std::int64_t>(ds.size());
    std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
    std::vector<bool> seen(ds.size(), false);

    for (const auto& ex : ds.examples) {
        if (ex.label < 0 || ex.label >= ds.num_classes)
            issues.push_back({IssueKind::label_out_of_range, ex.stable_id, ex.group,
                              "label " + std::to_string(ex.label)});
        if (ex.group < 0 || ex.group >= m)
            issues.push_back({IssueKind::group_out_of_range, ex.stable_id, ex.group,
                              "group " + std::to_string(ex.group) + " with m = " + std::to_string(m)});
        else
            ++counts[static_cast<std::size_t>(ex.group)];
        if (ex.attribute && *ex.attribute < 0)
            issues.push_back({IssueKind::attribute_out_of_range, ex.stable_id, ex.group,
                              "attribute " + std::to_string(*ex.attribute)});
        if (static_cast<int>(ex.features.size()) != ds.feature_dim)
            issues.push_back({IssueKind::feature_dim_mismatch, ex.stable_id, ex.group,
                              std::to_string(ex.features.size()) + " features, expected " +
                                  std::to_string(ds.feature_dim)});
        if (ex.stable_id < 0 || ex.stable_id >= n) {
            issues.push_back({IssueKind::id_out_of_range, ex.stable_id, ex.group, "id not in [0, N)"});
        } else if (seen[static_cast<std::size_t>(ex.stable_id)]) {
            issues.push_back({IssueKind::duplicate_id, ex.stable_id, ex.group, "id repeated"});
        } else {
            seen[static_cast<std::size_t>(ex.stable_id)] = true;
        }
    }

    for (int g = 0; g < m; ++g) {
        if (counts[static_cast<std::size_t>(g)] != layout.size(g))
            issues.push_back({IssueKind::size_mismatch, -1, g,
                              "layout says " + std::to_string(layout.size(g)) + ", dataset has " +
                                  std::to_string(counts[static_cast<std::size_t>(g)])});
    }
    return issues;
}

std::vector<int> group_assignment(const Dataset& ds) {
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& ex : ds.examples) out.push_back(ex.group);
    return out;
}

Dataset with_groups(const Dataset& ds, std::span<const int> assignment) {
    if (assignment.size() != ds.size())
        throw Error(ErrorCode::ShapeError, "assignment length differs from dataset size");
    Dataset out = ds;
    for (std::size_t i = 0; i < out.examples.size(); ++i) out.examples[i].group = assignment[i];
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void append_double(std::string& line, double x) {
    char buf[32];
    int len = std::snprintf(buf, sizeof buf, "%.17g", x);
    line.append(buf, static_cast<std::size_t>(len));
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

template <typename T>
T parse_int(std::string_view field, std::size_t line_no) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": bad integer '" + std::string(field) + "'");
    return value;
}

double parse_double(std::string_view field, std::size_t line_no) {
    std::string tmp(field);
    char* end = nullptr;
    double value = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size())
        throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": bad number '" + tmp + "'");
    return value;
}

} // namespace

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
    std::string line = "id,group,attribute,label";
    for (int j = 0; j < ds.feature_dim; ++j) line += ",f" + std::to_string(j);
    out << line << '\n';
    for (const auto& ex : ds.examples) {
        line.clear();
        line += std::to_string(ex.stable_id);
        line += ',';
        line += std::to_string(ex.group);
        line += ',';
        if (ex.attribute) line += std::to_string(*ex.attribute);
        line += ',';
        line += std::to_string(ex.label);
        for (double f : ex.features) {
            line += ',';
            append_double(line, f);
        }
        out << line << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, int num_classes, Split split) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "missing CSV header");
    auto header = split_commas(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "group" || header[2] != "attribute" ||
        header[3] != "label")
        throw Error(ErrorCode::Io, "CSV header must start with id,group,attribute,label");
    Dataset ds;
    ds.num_classes = num_classes;
    ds.split = split;
    ds.feature_dim = static_cast<int>(header.size() - 4);
    for (int j = 0; j < ds.feature_dim; ++j) {
        if (header[static_cast<std::size_t>(4 + j)] != "f" + std::to_string(j))
            throw Error(ErrorCode::Io, "unexpected feature column name");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_commas(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": wrong column count");
        LabeledExample ex;
        ex.stable_id = parse_int<std::int64_t>(fields[0], line_no);
        ex.group = parse_int<int>(fields[1], line_no);
        if (!fields[2].empty()) ex.attribute = parse_int<int>(fields[2], line_no);
        ex.label = parse_int<int>(fields[3], line_no);
        ex.features.reserve(static_cast<std::size_t>(ds.feature_dim));
        for (std::size_t j = 4; j < fields.size(); ++j) ex.features.push_back(parse_double(fields[j], line_no));
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

void save_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    write_dataset_csv(out, ds);
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Dataset load_dataset_csv(const std::string& path, int num_classes, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return read_dataset_csv(in, num_classes, split);
}

} // namespace gcdro
