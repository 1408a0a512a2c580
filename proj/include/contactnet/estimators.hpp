#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "contactnet/degrees.hpp"
#include "contactnet/dynamics.hpp"
#include "contactnet/graph.hpp"
#include "contactnet/rng.hpp"

namespace contactnet {

// ---------------------------------------------------------------------------
// Survival estimation

struct SurvivalEstimate {
    int successes = 0;
    int trials = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Wilson score interval, clamped to [0, 1].
inline std::pair<double, double> wilson_interval(int successes, int trials, double z) {
    if (trials < 1) throw std::invalid_argument("wilson_interval: trials must be >= 1");
    if (successes < 0 || successes > trials)
        throw std::invalid_argument("wilson_interval: successes out of range");
    if (!(z > 0)) throw std::invalid_argument("wilson_interval: z must be > 0");
    const double n = trials;
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // at p = 0 or 1 the score bound is exactly the endpoint; rounding must not
    // pull it inside p_hat
    const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

inline SurvivalEstimate make_survival_estimate(int successes, int trials, double z = 1.96) {
    const auto [lo, hi] = wilson_interval(successes, trials, z);
    return {successes, trials, static_cast<double>(successes) / trials, lo, hi};
}

/// Estimates the occupancy probability of a uniformly random vertex by
/// running duals from single random vertices: by duality, P(x occupied at t
/// from the all-infected start) equals P(the dual from {x} survives to t).
/// Replicate i uses the stream derive_seed(base, i) with base drawn once from
/// rng, so replicates are order-independent.
inline SurvivalEstimate estimate_rho(const Graph& g, double lambda, double horizon,
                                     int sample_size, rng_t& rng, double z = 1.96) {
    if (!(horizon > 0)) throw std::invalid_argument("estimate_rho: horizon must be > 0");
    if (sample_size < 1) throw std::invalid_argument("estimate_rho: sample_size must be >= 1");
    if (g.n < 1) throw std::invalid_argument("estimate_rho: empty graph");
    const std::uint64_t base = rng();
    int successes = 0;
    for (int i = 0; i < sample_size; ++i) {
        rng_t stream(derive_seed(base, static_cast<std::uint64_t>(i)));
        const int x = static_cast<int>(pick_below(stream, static_cast<std::uint64_t>(g.n)));
        if (run_dual(g, lambda, {x}, horizon, stream).survived) ++successes;
    }
    return make_survival_estimate(successes, sample_size, z);
}

/// Default dual horizon for rho estimation: long enough for dying duals to
/// die and surviving ones to reach the metastable plateau at desk scale.
inline double default_rho_horizon(double lambda, double alpha) {
    if (!(lambda > 0)) throw std::invalid_argument("default_rho_horizon: lambda must be > 0");
    return std::max(10.0 / lambda, std::pow(lambda, -(alpha - 1.0)));
}

// ---------------------------------------------------------------------------
// Exponent fit

struct ExponentFit {
    double beta_hat = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    double stderr_beta = 0.0;
    std::vector<std::pair<double, double>> points;  // (lambda, rho_hat)
};

namespace detail {

inline ExponentFit fit_loglog(const std::vector<std::pair<double, double>>& points,
                              const std::vector<double>& weights) {
    if (points.size() < 3) throw std::invalid_argument("fit_exponent: degenerate input, need >= 3 points");
    const std::size_t k = points.size();
    std::vector<double> x(k), y(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(points[i].first > 0) || !(points[i].second > 0))
            throw std::invalid_argument("fit_exponent: lambda and rho must be > 0");
        x[i] = std::log(points[i].first);
        y[i] = std::log(points[i].second);
    }
    double wsum = 0, xbar = 0, ybar = 0;
    for (std::size_t i = 0; i < k; ++i) {
        wsum += weights[i];
        xbar += weights[i] * x[i];
        ybar += weights[i] * y[i];
    }
    xbar /= wsum;
    ybar /= wsum;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += weights[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += weights[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0) throw std::invalid_argument("fit_exponent: degenerate input, zero variance in log lambda");

    ExponentFit fit;
    fit.points = points;
    fit.beta_hat = sxy / sxx;
    fit.intercept = ybar - fit.beta_hat * xbar;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double e = y[i] - (fit.intercept + fit.beta_hat * x[i]);
        ss_res += weights[i] * e * e;
        ss_tot += weights[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.stderr_beta = k > 2 ? std::sqrt(std::max(0.0, ss_res / static_cast<double>(k - 2)) / sxx) : 0.0;
    return fit;
}

}  // namespace detail

/// Ordinary least squares of log(rho) on log(lambda); the slope is beta_hat.
inline ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points) {
    return detail::fit_loglog(points, std::vector<double>(points.size(), 1.0));
}

/// Weighted variant (e.g. inverse CI widths). Not the default: the default
/// fit must not couple to interval construction choices.
inline ExponentFit fit_exponent_weighted(const std::vector<std::pair<double, double>>& points,
                                         const std::vector<double>& weights) {
    if (weights.size() != points.size())
        throw std::invalid_argument("fit_exponent_weighted: weights size mismatch");
    for (double w : weights)
        if (!(w > 0)) throw std::invalid_argument("fit_exponent_weighted: weights must be > 0");
    return detail::fit_loglog(points, weights);
}

// ---------------------------------------------------------------------------
// Persistence times

struct PersistenceStats {
    double median = 0.0;  // +inf when the order statistic is censored
    double q1 = 0.0;
    double q3 = 0.0;
    int censored = 0;
    int reps = 0;
    std::vector<std::optional<double>> extinction_times;  // nullopt = censored at cap
};

/// Extinction times from the all-infected start, censored at `cap`.
/// Censored replicates never report a finite time; order statistics treat
/// them as +infinity, so a censored median comes back infinite.
inline PersistenceStats persistence_time(const Graph& g, double lambda, double cap, int reps,
                                         rng_t& rng) {
    if (!(cap > 0)) throw std::invalid_argument("persistence_time: cap must be > 0");
    if (reps < 1) throw std::invalid_argument("persistence_time: reps must be >= 1");
    std::vector<int> all(static_cast<std::size_t>(g.n));
    for (int v = 0; v < g.n; ++v) all[static_cast<std::size_t>(v)] = v;

    PersistenceStats out;
    out.reps = reps;
    const std::uint64_t base = rng();
    std::vector<double> order;
    order.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        rng_t stream(derive_seed(base, static_cast<std::uint64_t>(i)));
        const auto r = run_dual(g, lambda, all, cap, stream);
        if (r.survived) {
            ++out.censored;
            out.extinction_times.push_back(std::nullopt);
            order.push_back(std::numeric_limits<double>::infinity());
        } else {
            out.extinction_times.push_back(r.end_time);
            order.push_back(r.end_time);
        }
    }
    std::sort(order.begin(), order.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(order.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (frac == 0.0) return order[lo];
        if (std::isinf(order[lo]) || std::isinf(order[lo + 1]))
            return std::numeric_limits<double>::infinity();
        return order[lo] + frac * (order[lo + 1] - order[lo]);
    };
    out.median = quantile(0.5);
    out.q1 = quantile(0.25);
    out.q3 = quantile(0.75);
    return out;
}

// ---------------------------------------------------------------------------
// Diameter scaling

struct DiameterScalingRow {
    int n = 0;
    int samples = 0;
    int connected = 0;
    double connected_fraction = 0.0;
    double mean_diameter = 0.0;  // over connected samples
    double bound = 0.0;          // (1 + slack) log n / log nu
    double fraction_within = 0.0;  // of connected samples
    std::vector<int> diameters;    // connected samples, sample order
};

/// Per n: sample configuration-model graphs, skip disconnected ones (the
/// fraction is reported), and compare exact diameters to
/// (1 + epsilon_slack) log n / log nu.
inline std::vector<DiameterScalingRow> diameter_scaling_check(double alpha, int k_min, int k_max,
                                                              const std::vector<int>& n_grid,
                                                              int samples, double epsilon_slack,
                                                              rng_t& rng) {
    if (k_min < 3) throw std::invalid_argument("diameter_scaling_check: k_min must be >= 3");
    if (samples < 1) throw std::invalid_argument("diameter_scaling_check: samples must be >= 1");
    if (epsilon_slack < 0) throw std::invalid_argument("diameter_scaling_check: negative slack");
    const DegreePmf pmf = power_law_pmf(alpha, k_min, k_max);
    const double nu = size_biased_mean(pmf);

    std::vector<DiameterScalingRow> table;
    const std::uint64_t base = rng();
    std::uint64_t job = 0;
    for (int n : n_grid) {
        if (n < k_min + 1)
            throw std::invalid_argument("diameter_scaling_check: n must exceed k_min");
        DiameterScalingRow row;
        row.n = n;
        row.samples = samples;
        row.bound = (1.0 + epsilon_slack) * std::log(static_cast<double>(n)) / std::log(nu);
        double diam_sum = 0.0;
        int within = 0;
        for (int s = 0; s < samples; ++s) {
            rng_t stream(derive_seed(base, job++));
            const auto built = sample_graph(pmf, n, stream);
            if (!is_connected(built.graph)) continue;
            ++row.connected;
            const int d = diameter(built.graph);
            row.diameters.push_back(d);
            diam_sum += d;
            if (static_cast<double>(d) <= row.bound) ++within;
        }
        row.connected_fraction = static_cast<double>(row.connected) / samples;
        if (row.connected > 0) {
            row.mean_diameter = diam_sum / row.connected;
            row.fraction_within = static_cast<double>(within) / row.connected;
        }
        table.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Dual lights a star

/// Runs the dual from {x} and reports whether some vertex of degree >= n^eps
/// ever classifies hot (at time 0 or at any event time) before extinction or
/// the horizon.
inline bool dual_lights_star(const Graph& g, double lambda, int x, double horizon, double epsilon,
                             rng_t& rng) {
    if (!(horizon > 0)) throw std::invalid_argument("dual_lights_star: horizon must be > 0");
    if (lambda < 0) throw std::invalid_argument("dual_lights_star: lambda must be >= 0");
    const std::vector<int> stars = stars_above(g, epsilon);
    if (stars.empty()) return false;

    std::vector<int> hot_threshold(static_cast<std::size_t>(g.n), -1);  // -1: not a star
    for (int s : stars)
        hot_threshold[static_cast<std::size_t>(s)] = detail::heat_threshold(lambda, g.degree(s), 4.0);

    ContactState st(g, {x});
    auto star_is_hot = [&](int s) {
        return st.inf_neighbors(s) >= hot_threshold[static_cast<std::size_t>(s)];
    };
    for (int s : stars)
        if (star_is_hot(s)) return true;

    while (st.num_infected() > 0) {
        const double dt = exp_sample(rng, st.total_rate(lambda));
        if (st.clock() + dt > horizon) break;
        st.advance_clock(dt);
        const Event ev = apply_next_transition(st, g, lambda, rng);
        if (ev.kind == EventKind::infection) {
            // Only stars adjacent to the flipped vertex can change state.
            for (int s : g.neighbors_of(ev.vertex))
                if (hot_threshold[static_cast<std::size_t>(s)] >= 0 && star_is_hot(s)) return true;
        }
    }
    return false;
}

}  // namespace contactnet
