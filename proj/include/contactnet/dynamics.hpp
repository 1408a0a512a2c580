#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "contactnet/fenwick.hpp"
#include "contactnet/format.hpp"
#include "contactnet/graph.hpp"
#include "contactnet/rng.hpp"

namespace contactnet {

// ---------------------------------------------------------------------------
// Engine state

/// Mutable state of one SIS run. Infected vertices recover at rate 1;
/// a susceptible vertex is infected at rate lambda times its infected
/// neighbor count. Incremental bookkeeping:
///   - infected_list with a position map gives O(1) uniform recovery picks,
///   - a Fenwick tree over susceptible vertices weighted by inf_neighbors
///     gives O(log n) infection picks with exact integer weights,
///   - edge_pressure (the Fenwick total) counts directed infected->susceptible
///     adjacencies, so the total rate is num_infected + lambda * edge_pressure.
class ContactState {
public:
    ContactState(const Graph& g, const std::vector<int>& initial)
        : infected_(static_cast<std::size_t>(g.n), 0),
          inf_neighbors_(static_cast<std::size_t>(g.n), 0),
          pos_(static_cast<std::size_t>(g.n), -1),
          pressure_(g.n) {
        for (int v : initial) infect(g, v);
    }

    bool infected(int v) const { return infected_[static_cast<std::size_t>(v)] != 0; }
    int inf_neighbors(int v) const { return inf_neighbors_[static_cast<std::size_t>(v)]; }
    int num_infected() const { return static_cast<int>(infected_list_.size()); }
    std::int64_t edge_pressure() const { return pressure_.total(); }
    double clock() const { return clock_; }
    double total_rate(double lambda) const {
        return static_cast<double>(num_infected()) + lambda * static_cast<double>(edge_pressure());
    }
    const std::vector<int>& infected_list() const { return infected_list_; }  // unordered
    std::vector<int> infected_sorted() const {
        std::vector<int> out = infected_list_;
        std::sort(out.begin(), out.end());
        return out;
    }

    void advance_clock(double dt) { clock_ += dt; }

    void infect(const Graph& g, int v) {
        if (v < 0 || v >= g.n) throw std::invalid_argument("ContactState: vertex out of range");
        if (infected_[static_cast<std::size_t>(v)])
            throw std::invalid_argument("ContactState: vertex already infected");
        infected_[static_cast<std::size_t>(v)] = 1;
        pos_[static_cast<std::size_t>(v)] = static_cast<int>(infected_list_.size());
        infected_list_.push_back(v);
        pressure_.add(v, -inf_neighbors_[static_cast<std::size_t>(v)]);
        for (int u : g.neighbors_of(v)) {
            ++inf_neighbors_[static_cast<std::size_t>(u)];
            if (!infected_[static_cast<std::size_t>(u)]) pressure_.add(u, 1);
        }
    }

    void recover(const Graph& g, int v) {
        if (v < 0 || v >= g.n) throw std::invalid_argument("ContactState: vertex out of range");
        if (!infected_[static_cast<std::size_t>(v)])
            throw std::invalid_argument("ContactState: vertex not infected");
        infected_[static_cast<std::size_t>(v)] = 0;
        const int idx = pos_[static_cast<std::size_t>(v)];
        const int last = infected_list_.back();
        infected_list_[static_cast<std::size_t>(idx)] = last;
        pos_[static_cast<std::size_t>(last)] = idx;
        infected_list_.pop_back();
        pos_[static_cast<std::size_t>(v)] = -1;
        pressure_.add(v, inf_neighbors_[static_cast<std::size_t>(v)]);
        for (int u : g.neighbors_of(v)) {
            --inf_neighbors_[static_cast<std::size_t>(u)];
            if (!infected_[static_cast<std::size_t>(u)]) pressure_.add(u, -1);
        }
    }

    int pick_infected(rng_t& rng) const {
        return infected_list_[static_cast<std::size_t>(
            pick_below(rng, infected_list_.size()))];
    }

    int pick_pressured(rng_t& rng) const {
        return pressure_.find(static_cast<std::int64_t>(
            pick_below(rng, static_cast<std::uint64_t>(pressure_.total()))));
    }

    /// Full recount of every incrementally maintained quantity.
    bool consistent_with(const Graph& g) const {
        if (num_infected() != static_cast<int>(std::count(infected_.begin(), infected_.end(), 1)))
            return false;
        std::int64_t pressure = 0;
        for (int v = 0; v < g.n; ++v) {
            int count = 0;
            for (int u : g.neighbors_of(v)) count += infected_[static_cast<std::size_t>(u)];
            if (count != inf_neighbors_[static_cast<std::size_t>(v)]) return false;
            if (!infected_[static_cast<std::size_t>(v)]) pressure += count;
        }
        if (pressure != edge_pressure()) return false;
        for (std::size_t i = 0; i < infected_list_.size(); ++i)
            if (pos_[static_cast<std::size_t>(infected_list_[i])] != static_cast<int>(i))
                return false;
        return true;
    }

private:
    std::vector<std::uint8_t> infected_;
    std::vector<int> inf_neighbors_;
    std::vector<int> pos_;  // index into infected_list_, -1 when susceptible
    std::vector<int> infected_list_;
    FenwickTree pressure_;
    double clock_ = 0.0;
};

// ---------------------------------------------------------------------------
// Gillespie stepping

enum class EventKind { recovery, infection };

struct Event {
    double dt = 0.0;
    EventKind kind = EventKind::recovery;
    int vertex = 0;
};

/// Draws the event branch and vertex (everything after the waiting time) and
/// applies it. Draw order is fixed: branch uniform, then vertex pick.
inline Event apply_next_transition(ContactState& st, const Graph& g, double lambda, rng_t& rng) {
    const double r = st.total_rate(lambda);
    const double u = uniform01(rng) * r;
    if (u < static_cast<double>(st.num_infected()) || st.edge_pressure() == 0) {
        const int v = st.pick_infected(rng);
        st.recover(g, v);
        return {0.0, EventKind::recovery, v};
    }
    const int v = st.pick_pressured(rng);
    st.infect(g, v);
    return {0.0, EventKind::infection, v};
}

/// One exact jump of the process: exponential waiting time at the total rate,
/// then recovery of a uniform infected vertex with probability
/// num_infected / R, else infection proportional to inf_neighbors.
inline Event gillespie_step(ContactState& st, const Graph& g, double lambda, rng_t& rng) {
    if (st.num_infected() == 0) throw std::invalid_argument("gillespie_step: empty state");
    if (lambda < 0) throw std::invalid_argument("gillespie_step: lambda must be >= 0");
    const double dt = exp_sample(rng, st.total_rate(lambda));
    st.advance_clock(dt);
    Event ev = apply_next_transition(st, g, lambda, rng);
    ev.dt = dt;
    return ev;
}

// ---------------------------------------------------------------------------
// Star classification

enum class StarHeat { cold, lit, hot };

namespace detail {

/// max(1, ceil(lambda*degree/divisor)) with a small slack so a product that
/// is an integer up to floating point noise does not round up.
inline int heat_threshold(double lambda, int degree, double divisor) {
    const double x = lambda * static_cast<double>(degree) / divisor;
    return std::max(1, static_cast<int>(std::ceil(x - 1e-9)));
}

}  // namespace detail

/// hot: at least max(1, ceil(lambda*degree/4)) infected neighbors;
/// lit: at least max(1, ceil(lambda*degree/10)). hot implies lit.
inline StarHeat classify_star(int inf_count, int degree, double lambda) {
    if (degree < 1) throw std::invalid_argument("classify_star: degree must be >= 1");
    if (inf_count < 0 || inf_count > degree)
        throw std::invalid_argument("classify_star: inf_count out of range");
    if (inf_count >= detail::heat_threshold(lambda, degree, 4.0)) return StarHeat::hot;
    if (inf_count >= detail::heat_threshold(lambda, degree, 10.0)) return StarHeat::lit;
    return StarHeat::cold;
}

// ---------------------------------------------------------------------------
// Forward and dual runs

struct TrajectoryPoint {
    double t = 0.0;
    int infected = 0;
    int lit = 0;
    int hot = 0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> samples;
    std::optional<double> extinction_time;
};

/// Runs the process until extinction or past the horizon, recording
/// num_infected and lit/hot counts over stars_above(g, epsilon) at each
/// scheduled time. Extinction adds a final all-zero row at the event time.
inline Trajectory run_forward(const Graph& g, double lambda, const std::vector<int>& initial,
                              double horizon, std::vector<double> sample_times, double epsilon,
                              rng_t& rng) {
    if (!(horizon > 0)) throw std::invalid_argument("run_forward: horizon must be > 0");
    if (lambda < 0) throw std::invalid_argument("run_forward: lambda must be >= 0");
    std::sort(sample_times.begin(), sample_times.end());
    sample_times.erase(std::unique(sample_times.begin(), sample_times.end()), sample_times.end());
    if (!sample_times.empty() && sample_times.front() < 0)
        throw std::invalid_argument("run_forward: negative sample time");

    const std::vector<int> stars = stars_above(g, epsilon);
    ContactState st(g, initial);
    Trajectory tr;

    auto record = [&](double t) {
        int lit = 0, hot = 0;
        for (int s : stars) {
            const StarHeat h = classify_star(st.inf_neighbors(s), g.degree(s), lambda);
            if (h != StarHeat::cold) ++lit;
            if (h == StarHeat::hot) ++hot;
        }
        tr.samples.push_back({t, st.num_infected(), lit, hot});
    };
    std::size_t si = 0;
    auto flush_before = [&](double t) {
        while (si < sample_times.size() && sample_times[si] < t && sample_times[si] <= horizon)
            record(sample_times[si++]);
    };

    while (true) {
        if (st.num_infected() == 0) {
            tr.extinction_time = st.clock();
            tr.samples.push_back({st.clock(), 0, 0, 0});
            break;
        }
        const double dt = exp_sample(rng, st.total_rate(lambda));
        const double t_next = st.clock() + dt;
        flush_before(t_next);
        if (t_next > horizon) break;
        st.advance_clock(dt);
        apply_next_transition(st, g, lambda, rng);
    }
    return tr;
}

/// CSV form of a trajectory: header then one row per sample.
inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
    os << "t,infected,lit,hot\n";
    for (const auto& s : tr.samples)
        os << format_double(s.t) << ',' << s.infected << ',' << s.lit << ',' << s.hot << '\n';
}

struct DualResult {
    bool survived = false;
    double end_time = 0.0;
    std::vector<int> final_set;  // sorted
};

/// Dual run from set a: by self-duality the dual has the law of the forward
/// process, so the same engine is used. survived means non-empty at the
/// horizon.
inline DualResult run_dual(const Graph& g, double lambda, const std::vector<int>& a,
                           double horizon, rng_t& rng) {
    if (!(horizon > 0)) throw std::invalid_argument("run_dual: horizon must be > 0");
    if (lambda < 0) throw std::invalid_argument("run_dual: lambda must be >= 0");
    ContactState st(g, a);
    while (st.num_infected() > 0) {
        const double dt = exp_sample(rng, st.total_rate(lambda));
        if (st.clock() + dt > horizon) break;
        st.advance_clock(dt);
        apply_next_transition(st, g, lambda, rng);
    }
    return {st.num_infected() > 0, st.clock(), st.infected_sorted()};
}

// ---------------------------------------------------------------------------
// Closed forms

/// Probability an initially healthy leaf of an always-infected center is
/// infected at time t: (lambda/(lambda+1)) (1 - e^{-(lambda+1)t}).
inline double p0_closed_form(double lambda, double t) {
    if (lambda < 0) throw std::invalid_argument("p0_closed_form: lambda must be >= 0");
    if (t < 0) throw std::invalid_argument("p0_closed_form: t must be >= 0");
    return lambda / (lambda + 1.0) * (-std::expm1(-(lambda + 1.0) * t));
}

/// Lower bound on transferring the infection along a path of m edges within
/// m time units: (e^{-1} (1 - e^{-lambda}) e^{-1})^m.
inline double path_transfer_bound(double lambda, int m) {
    if (!(lambda > 0)) throw std::invalid_argument("path_transfer_bound: lambda must be > 0");
    if (m < 0) throw std::invalid_argument("path_transfer_bound: m must be >= 0");
    const double per_edge = std::exp(-2.0) * (-std::expm1(-lambda));
    return std::pow(per_edge, m);
}

// ---------------------------------------------------------------------------
// Exact star chain

/// State of the contact process on a star with k leaves, collapsed by leaf
/// exchangeability to (infected leaves, center).
struct StarChain {
    int k = 1;
    int m = 0;       // infected leaves, 0..k
    int center = 0;  // 0 or 1
    double clock = 0.0;
};

enum class StarEvent { leaf_recovery, leaf_infection, center_recovery, center_infection };

namespace detail {

inline void check_star_chain(const StarChain& sc) {
    if (sc.k < 1) throw std::invalid_argument("StarChain: k must be >= 1");
    if (sc.m < 0 || sc.m > sc.k) throw std::invalid_argument("StarChain: m out of range");
    if (sc.center != 0 && sc.center != 1) throw std::invalid_argument("StarChain: center not 0/1");
}

}  // namespace detail

/// One transition of the collapsed chain. Rates: leaf recovery m, leaf
/// infection lambda (k-m) center, center recovery center, center infection
/// lambda m (1-center).
inline StarEvent star_chain_step(StarChain& sc, double lambda, rng_t& rng) {
    detail::check_star_chain(sc);
    if (lambda < 0) throw std::invalid_argument("star_chain_step: lambda must be >= 0");
    const double leaf_rec = static_cast<double>(sc.m);
    const double leaf_inf = lambda * static_cast<double>(sc.k - sc.m) * sc.center;
    const double center_rec = static_cast<double>(sc.center);
    const double center_inf = lambda * static_cast<double>(sc.m) * (1 - sc.center);
    const double total = leaf_rec + leaf_inf + center_rec + center_inf;
    if (total <= 0) throw std::invalid_argument("star_chain_step: chain is extinct");

    sc.clock += exp_sample(rng, total);
    const double u = uniform01(rng) * total;
    if (u < leaf_rec) {
        --sc.m;
        return StarEvent::leaf_recovery;
    }
    if (u < leaf_rec + leaf_inf) {
        ++sc.m;
        return StarEvent::leaf_infection;
    }
    if (u < leaf_rec + leaf_inf + center_rec) {
        sc.center = 0;
        return StarEvent::center_recovery;
    }
    sc.center = 1;
    return StarEvent::center_infection;
}

struct StarChainRun {
    bool survived = false;
    int min_infected_leaves = 0;
    std::map<int, double> hit_times;  // tracked level -> first time m equals it
    double center_first_recovery = std::numeric_limits<double>::infinity();
    std::optional<double> extinction_time;
};

/// Runs the chain until extinction, the horizon, or (when stop_level >= 0)
/// the first time m reaches stop_level. First hits of each tracked level are
/// recorded, including at time 0 for the initial state.
inline StarChainRun run_star_chain(const StarChain& initial, double lambda, double horizon,
                                   const std::vector<int>& track_levels, rng_t& rng,
                                   int stop_level = -1) {
    detail::check_star_chain(initial);
    if (!(horizon > 0)) throw std::invalid_argument("run_star_chain: horizon must be > 0");
    if (lambda < 0) throw std::invalid_argument("run_star_chain: lambda must be >= 0");

    StarChain sc = initial;
    StarChainRun out;
    out.min_infected_leaves = sc.m;
    auto note_state = [&]() {
        out.min_infected_leaves = std::min(out.min_infected_leaves, sc.m);
        for (int lvl : track_levels)
            if (sc.m == lvl && out.hit_times.find(lvl) == out.hit_times.end())
                out.hit_times.emplace(lvl, sc.clock);
    };
    note_state();
    while (true) {
        if (sc.m == 0 && sc.center == 0) {
            out.extinction_time = sc.clock;
            out.survived = false;
            break;
        }
        if (stop_level >= 0 && sc.m == stop_level) {
            out.survived = true;
            break;
        }
        // Peek at the waiting time so events past the horizon are not applied.
        StarChain probe = sc;
        const StarEvent ev = star_chain_step(probe, lambda, rng);
        if (probe.clock > horizon) {
            out.survived = true;
            break;
        }
        sc = probe;
        if (ev == StarEvent::center_recovery && !std::isfinite(out.center_first_recovery))
            out.center_first_recovery = sc.clock;
        note_state();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lower-bound walk

/// One jump of the walk that the infected-leaf count of a hot star
/// dominates: down 1 with rate lambda k/4, up 1 with rate 3 lambda k/4 while
/// below the cap, down a shifted-geometric N with rate 1.
inline int lower_bound_walk_step(int k, double lambda, int y, int l_cap, rng_t& rng) {
    if (!(lambda * k > 0)) throw std::invalid_argument("lower_bound_walk_step: lambda*k must be > 0");
    const double lk = lambda * static_cast<double>(k);
    const double u = uniform01(rng) * (lk + 1.0);
    if (u < lk / 4.0) return y - 1;
    if (u < lk) return y < l_cap ? y + 1 : y;
    return y - static_cast<int>(shifted_geometric(rng, lambda / (lambda + 1.0)));
}

// ---------------------------------------------------------------------------
// Coupled inclusion runs

struct CoupledRun {
    int violations = 0;
    std::vector<int> final_a;  // sorted
    std::vector<int> final_b;  // sorted
};

/// Runs two copies from a and b (a must be contained in b) against one shared
/// event stream: recovery marks are uniform vertices, infection arrows uniform
/// directed edges, at total rate n + 2 m lambda. Both copies apply each mark,
/// so containment is preserved pathwise; violations counts sample points where
/// it fails (expected 0).
inline CoupledRun run_coupled_inclusion(const Graph& g, double lambda, const std::vector<int>& a,
                                        const std::vector<int>& b, int num_events, rng_t& rng) {
    if (lambda < 0) throw std::invalid_argument("run_coupled_inclusion: lambda must be >= 0");
    if (num_events < 0) throw std::invalid_argument("run_coupled_inclusion: num_events < 0");
    ContactState sa(g, a);
    ContactState sb(g, b);
    for (int v : a)
        if (!sb.infected(v))
            throw std::invalid_argument("run_coupled_inclusion: a is not a subset of b");

    // Directed half-edge e = (owner[e] -> neighbors[e]).
    std::vector<int> owner(g.neighbors.size());
    for (int v = 0; v < g.n; ++v)
        for (auto i = g.offsets[static_cast<std::size_t>(v)];
             i < g.offsets[static_cast<std::size_t>(v) + 1]; ++i)
            owner[static_cast<std::size_t>(i)] = v;

    const double total_rate =
        static_cast<double>(g.n) + lambda * static_cast<double>(g.neighbors.size());
    CoupledRun out;
    for (int step = 0; step < num_events; ++step) {
        const double dt = exp_sample(rng, total_rate);
        sa.advance_clock(dt);
        sb.advance_clock(dt);
        const double u = uniform01(rng) * total_rate;
        if (u < static_cast<double>(g.n)) {
            const int v = static_cast<int>(pick_below(rng, static_cast<std::uint64_t>(g.n)));
            if (sa.infected(v)) sa.recover(g, v);
            if (sb.infected(v)) sb.recover(g, v);
        } else if (!g.neighbors.empty()) {
            const auto e = pick_below(rng, g.neighbors.size());
            const int from = owner[static_cast<std::size_t>(e)];
            const int to = g.neighbors[static_cast<std::size_t>(e)];
            if (sa.infected(from) && !sa.infected(to)) sa.infect(g, to);
            if (sb.infected(from) && !sb.infected(to)) sb.infect(g, to);
        }
        for (int v : sa.infected_list())
            if (!sb.infected(v)) {
                ++out.violations;
                break;
            }
    }
    out.final_a = sa.infected_sorted();
    out.final_b = sb.infected_sorted();
    return out;
}

}  // namespace contactnet
