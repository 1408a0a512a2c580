#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "contactnet/degrees.hpp"
#include "contactnet/errors.hpp"
#include "contactnet/rng.hpp"

namespace contactnet {

/// Undirected simple graph in compressed sparse row form.
/// Neighbor lists are sorted so iteration order is reproducible.
struct Graph {
    int n = 0;
    std::vector<std::int64_t> offsets;  // length n+1
    std::vector<int> neighbors;         // length 2m

    std::int64_t num_edges() const { return static_cast<std::int64_t>(neighbors.size()) / 2; }
    int degree(int v) const {
        return static_cast<int>(offsets[static_cast<std::size_t>(v) + 1] -
                                offsets[static_cast<std::size_t>(v)]);
    }
    std::span<const int> neighbors_of(int v) const {
        return {neighbors.data() + offsets[static_cast<std::size_t>(v)],
                static_cast<std::size_t>(degree(v))};
    }
};

/// Builds a Graph from undirected edges, validating simplicity and range.
inline Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n < 0) throw std::invalid_argument("make_graph: negative vertex count");
    Graph g;
    g.n = n;
    g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw std::invalid_argument("make_graph: vertex id out of range");
        if (u == v) throw std::invalid_argument("make_graph: self-loop");
        ++g.offsets[static_cast<std::size_t>(u) + 1];
        ++g.offsets[static_cast<std::size_t>(v) + 1];
    }
    for (int v = 0; v < n; ++v) g.offsets[static_cast<std::size_t>(v) + 1] += g.offsets[static_cast<std::size_t>(v)];
    g.neighbors.resize(edges.size() * 2);
    std::vector<std::int64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
    for (auto [u, v] : edges) {
        g.neighbors[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
        g.neighbors[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
    }
    for (int v = 0; v < n; ++v) {
        auto* first = g.neighbors.data() + g.offsets[static_cast<std::size_t>(v)];
        auto* last = g.neighbors.data() + g.offsets[static_cast<std::size_t>(v) + 1];
        std::sort(first, last);
        if (std::adjacent_find(first, last) != last)
            throw std::invalid_argument("make_graph: duplicate edge");
    }
    return g;
}

struct ConfigModelResult {
    Graph graph;
    int retries = 0;  // rejected (non-simple) matchings before acceptance
};

/// Erdos-Gallai: true iff some simple graph realizes the degree sequence.
/// Assumes every degree >= 1 and an even sum.
inline bool simple_realization_exists(std::vector<int> degrees) {
    std::sort(degrees.begin(), degrees.end(), std::greater<int>());
    const std::size_t n = degrees.size();
    if (degrees[0] >= static_cast<int>(n)) return false;
    std::vector<std::int64_t> prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + degrees[i];
    for (std::size_t k = 1; k <= n; ++k) {
        // tail is sorted descending: entries >= k first, then the rest
        const auto split =
            std::lower_bound(degrees.begin() + static_cast<std::ptrdiff_t>(k), degrees.end(),
                             static_cast<int>(k), [](int deg, int kk) { return deg >= kk; });
        const auto nbig = static_cast<std::int64_t>(
            split - (degrees.begin() + static_cast<std::ptrdiff_t>(k)));
        const std::int64_t small_sum =
            prefix[n] - prefix[static_cast<std::size_t>(split - degrees.begin())];
        const auto kk = static_cast<std::int64_t>(k);
        if (prefix[k] > kk * (kk - 1) + kk * nbig + small_sum) return false;
    }
    return true;
}

namespace detail {

/// One uniform matching attempt per round, abandoned at the first self-loop
/// or duplicate edge. Early abort rejects exactly the matchings a full check
/// would reject, so accepted graphs keep the uniform-given-simple law.
/// Returns the number of rejected rounds, or -1 if max_rounds was exhausted.
inline int pair_until_simple(std::vector<int>& stubs, std::vector<std::pair<int, int>>& edges,
                             rng_t& rng, int max_rounds) {
    const std::size_t m = edges.size();
    std::size_t cap = 16;
    while (cap < 4 * m) cap <<= 1;
    const auto shift = static_cast<unsigned>(64 - std::countr_zero(cap));
    const std::size_t mask = cap - 1;
    std::vector<std::uint64_t> keys(cap, 0);
    std::vector<std::uint32_t> stamps(cap, 0);

    for (int attempt = 0; attempt <= max_rounds; ++attempt) {
        const auto stamp = static_cast<std::uint32_t>(attempt) + 1;
        bool simple = true;
        for (std::size_t e = 0; e < m; ++e) {
            const std::size_t i = 2 * e;
            const std::size_t j =
                i + 1 + static_cast<std::size_t>(pick_below(rng, stubs.size() - i - 1));
            std::swap(stubs[i + 1], stubs[j]);
            const int u = std::min(stubs[i], stubs[i + 1]);
            const int v = std::max(stubs[i], stubs[i + 1]);
            if (u == v) {
                simple = false;
                break;
            }
            const std::uint64_t key =
                (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
            std::size_t slot =
                static_cast<std::size_t>((key * 0x9e3779b97f4a7c15ULL) >> shift) & mask;
            while (stamps[slot] == stamp) {
                if (keys[slot] == key) {
                    simple = false;
                    break;
                }
                slot = (slot + 1) & mask;
            }
            if (!simple) break;
            keys[slot] = key;
            stamps[slot] = stamp;
            edges[e] = {u, v};
        }
        if (simple) return attempt;
    }
    return -1;
}

}  // namespace detail

/// Uniform perfect matching of half-edges, resampled from scratch until the
/// multigraph is simple. Rejection preserves the uniform-given-simple law.
inline ConfigModelResult configuration_model(const std::vector<int>& degrees, rng_t& rng,
                                             int max_retries = 1000) {
    if (degrees.empty()) throw std::invalid_argument("configuration_model: empty degree sequence");
    std::int64_t total = 0;
    for (int d : degrees) {
        if (d < 1) throw std::invalid_argument("configuration_model: degree < 1");
        total += d;
    }
    if (total % 2 != 0) throw std::invalid_argument("configuration_model: odd degree sum");
    if (!simple_realization_exists(degrees))
        throw resource_limit_error(
            "configuration_model: no simple graph realizes this degree sequence");

    const int n = static_cast<int>(degrees.size());
    std::vector<int> stubs(static_cast<std::size_t>(total));
    {
        std::size_t pos = 0;
        for (int v = 0; v < n; ++v)
            for (int i = 0; i < degrees[static_cast<std::size_t>(v)]; ++i) stubs[pos++] = v;
    }
    std::vector<std::pair<int, int>> edges(static_cast<std::size_t>(total / 2));
    const int rounds = detail::pair_until_simple(stubs, edges, rng, max_retries);
    if (rounds < 0)
        throw resource_limit_error("configuration_model: simplicity unreachable within " +
                                   std::to_string(max_retries) + " retries");
    return {make_graph(n, edges), rounds};
}

struct SampledGraph {
    Graph graph;
    int degree_draws = 0;               // degree sequences tried
    std::int64_t matching_rounds = 0;   // rejected matchings across all draws
};

/// Simple configuration-model graph with pmf degrees: degree sequence and
/// matching are rejected jointly until the graph is simple. The per-sequence
/// acceptance chance is about matching_rounds * P(simple | degrees), so the
/// accepted degree law carries the same P(simple | degrees) tilt as exact
/// conditioning on simplicity; heavy-tailed draws whose matching never gets
/// simple at desk scale are abandoned instead of stalling.
inline SampledGraph sample_graph(const DegreePmf& pmf, int n, rng_t& rng,
                                 int matching_rounds = 1000, int degree_draws = 1000) {
    if (matching_rounds < 0) throw std::invalid_argument("sample_graph: matching_rounds < 0");
    if (degree_draws < 1) throw std::invalid_argument("sample_graph: degree_draws < 1");
    SampledGraph out;
    std::vector<std::pair<int, int>> edges;
    for (int draw = 0; draw < degree_draws; ++draw) {
        const DegreeSequence seq = sample_degree_sequence(pmf, n, rng);
        ++out.degree_draws;
        if (!simple_realization_exists(seq.degrees)) continue;
        std::int64_t total = 0;
        for (int d : seq.degrees) total += d;
        std::vector<int> stubs(static_cast<std::size_t>(total));
        std::size_t pos = 0;
        for (int v = 0; v < n; ++v)
            for (int i = 0; i < seq.degrees[static_cast<std::size_t>(v)]; ++i) stubs[pos++] = v;
        edges.assign(static_cast<std::size_t>(total / 2), {0, 0});
        const int rounds = detail::pair_until_simple(stubs, edges, rng, matching_rounds);
        if (rounds < 0) {
            out.matching_rounds += matching_rounds + 1;
            continue;
        }
        out.matching_rounds += rounds;
        out.graph = make_graph(n, edges);
        return out;
    }
    throw resource_limit_error("sample_graph: no simple graph within " +
                               std::to_string(degree_draws) + " degree draws");
}

namespace detail {

struct BfsResult {
    int eccentricity = 0;
    int reached = 0;
};

/// One BFS; dist is scratch of size n filled with -1 by the caller contract
/// (it is restored to -1 for touched vertices before returning).
inline BfsResult bfs_from(const Graph& g, int src, std::vector<int>& dist,
                          std::vector<int>& queue) {
    queue.clear();
    queue.push_back(src);
    dist[static_cast<std::size_t>(src)] = 0;
    BfsResult r{0, 1};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int u = queue[head];
        const int du = dist[static_cast<std::size_t>(u)];
        for (int v : g.neighbors_of(u)) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = du + 1;
                r.eccentricity = du + 1;
                ++r.reached;
                queue.push_back(v);
            }
        }
    }
    for (int u : queue) dist[static_cast<std::size_t>(u)] = -1;
    return r;
}

}  // namespace detail

/// True iff BFS from vertex 0 reaches all n vertices.
inline bool is_connected(const Graph& g) {
    if (g.n <= 1) return true;
    std::vector<int> dist(static_cast<std::size_t>(g.n), -1);
    std::vector<int> queue;
    queue.reserve(static_cast<std::size_t>(g.n));
    return detail::bfs_from(g, 0, dist, queue).reached == g.n;
}

/// Max BFS distance from src within its component.
inline int eccentricity(const Graph& g, int src) {
    if (src < 0 || src >= g.n) throw std::invalid_argument("eccentricity: vertex out of range");
    std::vector<int> dist(static_cast<std::size_t>(g.n), -1);
    std::vector<int> queue;
    queue.reserve(static_cast<std::size_t>(g.n));
    return detail::bfs_from(g, src, dist, queue).eccentricity;
}

/// Exact diameter by all-source BFS. O(n(n+m)); fine at desk scale.
inline int diameter(const Graph& g) {
    if (g.n == 0) throw std::invalid_argument("diameter: empty graph");
    std::vector<int> dist(static_cast<std::size_t>(g.n), -1);
    std::vector<int> queue;
    queue.reserve(static_cast<std::size_t>(g.n));
    int diam = 0;
    for (int v = 0; v < g.n; ++v) {
        const auto r = detail::bfs_from(g, v, dist, queue);
        if (r.reached != g.n) throw std::invalid_argument("diameter: disconnected graph");
        diam = std::max(diam, r.eccentricity);
    }
    return diam;
}

/// Lower bound on the diameter from `sources` random BFS roots.
inline int diameter_lower_bound(const Graph& g, int sources, rng_t& rng) {
    if (g.n == 0 || sources < 1) throw std::invalid_argument("diameter_lower_bound: bad input");
    std::vector<int> dist(static_cast<std::size_t>(g.n), -1);
    std::vector<int> queue;
    queue.reserve(static_cast<std::size_t>(g.n));
    int best = 0;
    for (int s = 0; s < sources; ++s) {
        const int src = static_cast<int>(pick_below(rng, static_cast<std::uint64_t>(g.n)));
        best = std::max(best, detail::bfs_from(g, src, dist, queue).eccentricity);
    }
    return best;
}

struct ClusterGrowth {
    int root = 0;
    std::vector<std::int64_t> generation_sizes;  // Z_0 = 1, Z_1, ...
    std::int64_t collisions = 0;
    std::int64_t exposed = 0;
};

/// Breadth-first exposure from root, one full generation at a time, stopping
/// once `max_size` vertices are exposed or the component is exhausted.
/// collisions counts non-tree edges: an edge is counted when the second of
/// its endpoints is scanned, so a full exposure counts every such edge once.
inline ClusterGrowth expose_cluster(const Graph& g, int root, std::int64_t max_size) {
    if (root < 0 || root >= g.n) throw std::invalid_argument("expose_cluster: root out of range");
    if (max_size < 1) throw std::invalid_argument("expose_cluster: max_size must be >= 1");

    ClusterGrowth out;
    out.root = root;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.n), 0);
    std::vector<std::uint8_t> scanned(static_cast<std::size_t>(g.n), 0);
    std::vector<int> parent(static_cast<std::size_t>(g.n), -1);
    std::vector<int> frontier{root};
    seen[static_cast<std::size_t>(root)] = 1;
    out.generation_sizes.push_back(1);
    out.exposed = 1;

    while (!frontier.empty() && out.exposed < max_size) {
        std::vector<int> next;
        for (int u : frontier) {
            scanned[static_cast<std::size_t>(u)] = 1;
            for (int v : g.neighbors_of(u)) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    parent[static_cast<std::size_t>(v)] = u;
                    next.push_back(v);
                } else if (v != parent[static_cast<std::size_t>(u)] &&
                           scanned[static_cast<std::size_t>(v)]) {
                    ++out.collisions;
                }
            }
        }
        if (next.empty()) break;
        out.generation_sizes.push_back(static_cast<std::int64_t>(next.size()));
        out.exposed += static_cast<std::int64_t>(next.size());
        frontier = std::move(next);
    }
    return out;
}

/// Vertices of degree at least n^epsilon, ascending.
inline std::vector<int> stars_above(const Graph& g, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("stars_above: epsilon must lie in (0,1)");
    const double threshold = std::pow(static_cast<double>(g.n), epsilon);
    std::vector<int> out;
    for (int v = 0; v < g.n; ++v)
        if (static_cast<double>(g.degree(v)) >= threshold) out.push_back(v);
    return out;
}

/// Text form: "n m" then one "u v" line per edge with u < v, lexicographic.
/// Writing then reading then writing again is byte-identical.
inline void write_graph(const Graph& g, std::ostream& os) {
    os << g.n << ' ' << g.num_edges() << '\n';
    for (int u = 0; u < g.n; ++u)
        for (int v : g.neighbors_of(u))
            if (u < v) os << u << ' ' << v << '\n';
}

inline Graph read_graph(std::istream& is) {
    int n = 0;
    std::int64_t m = 0;
    if (!(is >> n >> m) || n < 0 || m < 0) throw std::invalid_argument("read_graph: bad header");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(m));
    for (std::int64_t e = 0; e < m; ++e) {
        int u = 0, v = 0;
        if (!(is >> u >> v)) throw std::invalid_argument("read_graph: truncated edge list");
        if (u >= v) throw std::invalid_argument("read_graph: edges must satisfy u < v");
        if (!edges.empty() && edges.back() >= std::make_pair(u, v))
            throw std::invalid_argument("read_graph: edges must be sorted lexicographically");
        edges.emplace_back(u, v);
    }
    return make_graph(n, edges);
}

inline void save_graph(const Graph& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_graph: cannot open " + path);
    write_graph(g, os);
}

inline Graph load_graph(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_graph: cannot open " + path);
    return read_graph(is);
}

}  // namespace contactnet
