#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gcdro/core.hpp"

namespace gcdro::test {

// Dataset with one example per entry of `groups`; features are the id and the
// group, labels alternate.
inline Dataset tiny_dataset(const std::vector<int>& groups, int num_classes = 2) {
    Dataset ds;
    ds.num_classes = num_classes;
    ds.feature_dim = 2;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        LabeledExample ex;
        ex.features = {static_cast<double>(i), static_cast<double>(groups[i])};
        ex.label = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        ex.attribute = groups[i] % 2;
        ex.group = groups[i];
        ex.stable_id = static_cast<std::int64_t>(i);
        ds.examples.push_back(ex);
    }
    return ds;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

inline double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

} // namespace gcdro::test
