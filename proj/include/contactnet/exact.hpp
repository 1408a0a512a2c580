#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "contactnet/errors.hpp"
#include "contactnet/graph.hpp"

namespace contactnet {

namespace detail {

constexpr int kMaxOracleVertices = 12;

inline std::uint32_t mask_of(const Graph& g, const std::vector<int>& verts) {
    std::uint32_t mask = 0;
    for (int v : verts) {
        if (v < 0 || v >= g.n) throw std::invalid_argument("oracle: vertex out of range");
        const auto bit = std::uint32_t{1} << v;
        if (mask & bit) throw std::invalid_argument("oracle: duplicate vertex in set");
        mask |= bit;
    }
    return mask;
}

}  // namespace detail

/// Exact distribution of the process over all 2^n subsets at time t, from the
/// point mass on `initial`. Uniformization: the chain is embedded in a Poisson
/// stream at the max exit rate and the series runs until its weights underflow,
/// so truncation error is below double resolution even for tail probabilities.
/// Long horizons are split so exp(-rate*chunk) stays inside double range.
inline std::vector<double> transient_distribution(const Graph& g, double lambda,
                                                  const std::vector<int>& initial, double t) {
    if (g.n > detail::kMaxOracleVertices)
        throw resource_limit_error("transient_distribution: graph too large for the 2^n oracle");
    if (lambda < 0) throw std::invalid_argument("transient_distribution: lambda must be >= 0");
    if (t < 0) throw std::invalid_argument("transient_distribution: t must be >= 0");

    const std::uint32_t num_states = std::uint32_t{1} << g.n;
    std::vector<std::uint32_t> nb_mask(static_cast<std::size_t>(g.n), 0);
    for (int v = 0; v < g.n; ++v)
        for (int u : g.neighbors_of(v)) nb_mask[static_cast<std::size_t>(v)] |= std::uint32_t{1} << u;

    // exit[s] = |s| + lambda * (directed infected->susceptible pairs in s)
    std::vector<double> exit_rate(num_states, 0.0);
    double unif_rate = 0.0;
    for (std::uint32_t s = 0; s < num_states; ++s) {
        std::int64_t pressure = 0;
        for (int v = 0; v < g.n; ++v)
            if (!(s & (std::uint32_t{1} << v)))
                pressure += std::popcount(s & nb_mask[static_cast<std::size_t>(v)]);
        exit_rate[s] = static_cast<double>(std::popcount(s)) + lambda * static_cast<double>(pressure);
        unif_rate = std::max(unif_rate, exit_rate[s]);
    }

    std::vector<double> dist(num_states, 0.0);
    dist[detail::mask_of(g, initial)] = 1.0;
    if (t == 0.0 || unif_rate == 0.0) return dist;

    int chunks = 1;
    while (unif_rate * t / chunks > 600.0) chunks *= 2;
    const double chunk_t = t / chunks;

    std::vector<double> cur(num_states), next(num_states), acc(num_states);
    for (int c = 0; c < chunks; ++c) {
        const double a = unif_rate * chunk_t;
        double weight = std::exp(-a);  // a <= 600 keeps this normal
        cur = dist;
        for (std::uint32_t s = 0; s < num_states; ++s) acc[s] = weight * cur[s];
        for (std::int64_t j = 1; weight > 0.0; ++j) {
            // next = cur P with P = I + Q / unif_rate
            for (std::uint32_t s = 0; s < num_states; ++s)
                next[s] = cur[s] * (1.0 - exit_rate[s] / unif_rate);
            for (std::uint32_t s = 0; s < num_states; ++s) {
                const double mass = cur[s];
                if (mass == 0.0) continue;
                for (int v = 0; v < g.n; ++v) {
                    const auto bit = std::uint32_t{1} << v;
                    if (s & bit) {
                        next[s ^ bit] += mass / unif_rate;  // recovery at rate 1
                    } else {
                        const int k = std::popcount(s & nb_mask[static_cast<std::size_t>(v)]);
                        if (k > 0) next[s | bit] += mass * (lambda * k / unif_rate);
                    }
                }
            }
            cur.swap(next);
            weight *= a / static_cast<double>(j);
            for (std::uint32_t s = 0; s < num_states; ++s) acc[s] += weight * cur[s];
        }
        dist = acc;
    }
    return dist;
}

/// Exact survival probability P(process from `a` is non-empty at time t).
/// Sums the nonzero states rather than 1 - dist[0]: cancellation in the
/// latter floors tiny survivals at rounding noise.
inline double exact_survival_tiny(const Graph& g, double lambda, const std::vector<int>& a,
                                  double t) {
    const auto dist = transient_distribution(g, lambda, a, t);
    kahan_sum alive;
    for (std::size_t s = 1; s < dist.size(); ++s) alive.add(dist[s]);
    return alive.value();
}

struct DualityGap {
    double p_ab = 0.0;  // P(process from a intersects b at t)
    double p_ba = 0.0;  // P(process from b intersects a at t)
    double abs_gap = 0.0;
};

/// Both sides of the duality identity, computed exactly. The two hitting
/// probabilities agree for the true process, so abs_gap measures oracle and
/// engine-model error only.
inline DualityGap duality_gap(const Graph& g, double lambda, const std::vector<int>& a,
                              const std::vector<int>& b, double t) {
    const std::uint32_t mask_a = detail::mask_of(g, a);
    const std::uint32_t mask_b = detail::mask_of(g, b);
    const auto dist_a = transient_distribution(g, lambda, a, t);
    const auto dist_b = transient_distribution(g, lambda, b, t);
    DualityGap out;
    for (std::uint32_t s = 0; s < dist_a.size(); ++s) {
        if (s & mask_b) out.p_ab += dist_a[s];
        if (s & mask_a) out.p_ba += dist_b[s];
    }
    out.abs_gap = std::fabs(out.p_ab - out.p_ba);
    return out;
}

}  // namespace contactnet
