#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "contactnet/graph.hpp"

namespace testing {

/// Upper-tail p-value of a chi-square statistic with the given dof.
inline double chi_square_pvalue(double stat, int dof) {
    return boost::math::gamma_q(static_cast<double>(dof) / 2.0, stat / 2.0);
}

/// Pearson statistic for observed counts against expected counts (same
/// length, expected all > 0).
inline double chi_square_stat(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    return stat;
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic law).
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto na = a.size(), nb = b.size();
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < na && j < nb) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(na);
        const double fb = static_cast<double>(j) / static_cast<double>(nb);
        d = std::max(d, std::fabs(fa - fb));
    }
    const double ne = static_cast<double>(na) * static_cast<double>(nb) /
                      static_cast<double>(na + nb);
    const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::clamp(p, 0.0, 1.0);
}

inline contactnet::Graph path_graph(int num_vertices) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v + 1 < num_vertices; ++v) edges.emplace_back(v, v + 1);
    return contactnet::make_graph(num_vertices, edges);
}

inline contactnet::Graph cycle_graph(int num_vertices) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v + 1 < num_vertices; ++v) edges.emplace_back(v, v + 1);
    edges.emplace_back(0, num_vertices - 1);
    return contactnet::make_graph(num_vertices, edges);
}

inline contactnet::Graph complete_graph(int num_vertices) {
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < num_vertices; ++u)
        for (int v = u + 1; v < num_vertices; ++v) edges.emplace_back(u, v);
    return contactnet::make_graph(num_vertices, edges);
}

/// Star with the center at 0 and the given number of leaves.
inline contactnet::Graph star_graph(int leaves) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v <= leaves; ++v) edges.emplace_back(0, v);
    return contactnet::make_graph(leaves + 1, edges);
}

}  // namespace testing
