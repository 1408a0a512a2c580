#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "contactnet/degrees.hpp"
#include "contactnet/errors.hpp"
#include "contactnet/graph.hpp"
#include "helpers.hpp"

using namespace contactnet;
using Catch::Matchers::WithinAbs;

namespace {

/// Enumerates all perfect matchings of the half-edges implied by `degrees`
/// and counts how many produce a simple graph. Exact oracle, factorial cost.
struct MatchingCensus {
    int total = 0;
    int simple = 0;
};

void census_rec(std::vector<int>& stub_owner, std::vector<bool>& used, MatchingCensus& out,
                std::vector<std::pair<int, int>>& edges, int n) {
    std::size_t first = used.size();
    for (std::size_t i = 0; i < used.size(); ++i)
        if (!used[i]) {
            first = i;
            break;
        }
    if (first == used.size()) {
        ++out.total;
        std::set<std::pair<int, int>> seen;
        bool ok = true;
        for (auto [u, v] : edges) {
            if (u == v) ok = false;
            if (!seen.insert({std::min(u, v), std::max(u, v)}).second) ok = false;
        }
        (void)n;
        if (ok) ++out.simple;
        return;
    }
    used[first] = true;
    for (std::size_t j = first + 1; j < used.size(); ++j) {
        if (used[j]) continue;
        used[j] = true;
        edges.emplace_back(stub_owner[first], stub_owner[j]);
        census_rec(stub_owner, used, out, edges, n);
        edges.pop_back();
        used[j] = false;
    }
    used[first] = false;
}

MatchingCensus matching_census(const std::vector<int>& degrees) {
    std::vector<int> stub_owner;
    for (int v = 0; v < static_cast<int>(degrees.size()); ++v)
        for (int i = 0; i < degrees[static_cast<std::size_t>(v)]; ++i) stub_owner.push_back(v);
    std::vector<bool> used(stub_owner.size(), false);
    std::vector<std::pair<int, int>> edges;
    MatchingCensus out;
    census_rec(stub_owner, used, out, edges, static_cast<int>(degrees.size()));
    return out;
}

void check_graph_invariants(const Graph& g, const std::vector<int>& degrees) {
    REQUIRE(g.n == static_cast<int>(degrees.size()));
    std::int64_t total = 0;
    for (int v = 0; v < g.n; ++v) {
        REQUIRE(g.degree(v) == degrees[static_cast<std::size_t>(v)]);
        total += g.degree(v);
        auto nb = g.neighbors_of(v);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            REQUIRE(nb[i] != v);                      // no self-loop
            if (i > 0) REQUIRE(nb[i] > nb[i - 1]);    // sorted, no duplicates
            // symmetry
            auto back = g.neighbors_of(nb[i]);
            REQUIRE(std::binary_search(back.begin(), back.end(), v));
        }
    }
    REQUIRE(total == static_cast<std::int64_t>(g.neighbors.size()));
    REQUIRE(total % 2 == 0);
}

}  // namespace

TEST_CASE("configuration_model trivial and impossible sequences") {
    rng_t rng(5);
    const ConfigModelResult r = configuration_model({1, 1}, rng);
    REQUIRE(r.graph.n == 2);
    REQUIRE(r.graph.num_edges() == 1);
    REQUIRE(r.graph.neighbors_of(0)[0] == 1);
    REQUIRE(r.retries == 0);

    rng_t rng2(5);
    REQUIRE_THROWS_AS(configuration_model({3, 3}, rng2), resource_limit_error);
    rng_t rng3(5);
    REQUIRE_THROWS_AS(configuration_model({1, 1, 1}, rng3), std::invalid_argument);
    rng_t rng4(5);
    REQUIRE_THROWS_AS(configuration_model({0, 2, 2}, rng4), std::invalid_argument);
}

TEST_CASE("simple_realization_exists agrees with small known cases") {
    REQUIRE(simple_realization_exists({1, 1}));
    REQUIRE(simple_realization_exists({2, 2, 2}));
    REQUIRE(simple_realization_exists({3, 3, 3, 3}));
    REQUIRE(simple_realization_exists({5, 1, 1, 1, 1, 1}));  // the 5-leaf star
    REQUIRE_FALSE(simple_realization_exists({3, 3}));
    REQUIRE_FALSE(simple_realization_exists({3, 3, 1, 1}));
    REQUIRE_FALSE(simple_realization_exists({4, 4, 2, 2}));
}

TEST_CASE("sample_graph draws degrees jointly with the matching") {
    const DegreePmf pmf = power_law_pmf(3.5, 3, 1000000);
    rng_t rng(67);
    const SampledGraph s = sample_graph(pmf, 2000, rng);
    REQUIRE(s.graph.n == 2000);
    REQUIRE(s.degree_draws >= 1);
    REQUIRE(s.matching_rounds >= 0);
    int max_deg = 0, min_deg = 2000;
    for (int v = 0; v < s.graph.n; ++v) {
        max_deg = std::max(max_deg, s.graph.degree(v));
        min_deg = std::min(min_deg, s.graph.degree(v));
    }
    REQUIRE(min_deg >= 3);
    REQUIRE(max_deg >= 20);  // the heavy tail survives the simplicity tilt

    rng_t rng2(67);
    const SampledGraph again = sample_graph(pmf, 2000, rng2);
    REQUIRE(again.graph.offsets == s.graph.offsets);
    REQUIRE(again.graph.neighbors == s.graph.neighbors);

    // two vertices of degree 3 can never form a simple graph, at any budget
    rng_t rng3(1);
    REQUIRE_THROWS_AS(sample_graph(power_law_pmf(3.5, 3, 3), 2, rng3), resource_limit_error);
    rng_t rng4(1);
    REQUIRE_THROWS_AS(sample_graph(pmf, 10, rng4, -1), std::invalid_argument);
    rng_t rng5(1);
    REQUIRE_THROWS_AS(sample_graph(pmf, 10, rng5, 10, 0), std::invalid_argument);
}

TEST_CASE("configuration_model on [2,2,2]: triangle, acceptance 8/15") {
    // exact enumeration oracle over all pairings of the six half-edges
    const MatchingCensus census = matching_census({2, 2, 2});
    REQUIRE(census.total == 15);
    REQUIRE(census.simple == 8);

    rng_t rng(11);
    const int accepted = 400;
    std::int64_t rounds = 0;
    for (int i = 0; i < accepted; ++i) {
        const ConfigModelResult r = configuration_model({2, 2, 2}, rng);
        REQUIRE(r.graph.num_edges() == 3);       // always the triangle
        REQUIRE(r.graph.degree(0) == 2);
        rounds += r.retries + 1;
    }
    const double p_hat = static_cast<double>(accepted) / static_cast<double>(rounds);
    const double p = 8.0 / 15.0;
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(rounds));
    REQUIRE_THAT(p_hat, WithinAbs(p, 4 * se));
}

TEST_CASE("configuration_model preserves the degree sequence and simplicity") {
    const DegreePmf pmf = power_law_pmf(3.5, 3, 12);
    rng_t rng(17);
    const DegreeSequence seq = sample_degree_sequence(pmf, 2000, rng);
    const ConfigModelResult r = configuration_model(seq.degrees, rng, 100000);
    check_graph_invariants(r.graph, seq.degrees);
}

TEST_CASE("retry counts stay near the finite-variance limit across n") {
    // bounded support keeps the realized size-biased mean self-averaging, so
    // the per-round acceptance chance is the same at both sizes
    const DegreePmf pmf = power_law_pmf(3.5, 3, 12);
    auto mean_rounds = [&](int n, int samples, std::uint64_t seed) {
        rng_t rng(seed);
        double rounds = 0;
        for (int i = 0; i < samples; ++i) {
            const DegreeSequence seq = sample_degree_sequence(pmf, n, rng);
            rounds += 1 + configuration_model(seq.degrees, rng, 100000).retries;
        }
        return rounds / samples;
    };
    const double small = mean_rounds(1000, 100, 21);
    const double large = mean_rounds(10000, 60, 22);
    REQUIRE(std::fabs(small - large) / std::max(small, large) < 0.5);
}

TEST_CASE("is_connected") {
    REQUIRE(is_connected(testing::complete_graph(3)));
    const Graph two_edges = make_graph(4, {{0, 1}, {2, 3}});
    REQUIRE_FALSE(is_connected(two_edges));
}

TEST_CASE("connectivity of power-law graphs at desk scale") {
    const DegreePmf pmf = power_law_pmf(3.5, 3, 1000000);
    rng_t rng(31);
    int connected = 0;
    const int samples = 25;
    for (int i = 0; i < samples; ++i)
        if (is_connected(sample_graph(pmf, 10000, rng).graph)) ++connected;
    REQUIRE(connected >= samples - 1);
}

TEST_CASE("diameter on canonical graphs") {
    REQUIRE(diameter(testing::complete_graph(4)) == 1);
    REQUIRE(diameter(testing::cycle_graph(6)) == 3);
    REQUIRE(diameter(testing::star_graph(5)) == 2);
    REQUIRE_THROWS_AS(diameter(make_graph(4, {{0, 1}, {2, 3}})), std::invalid_argument);
}

TEST_CASE("eccentricity never exceeds the diameter") {
    const DegreePmf pmf = power_law_pmf(3.5, 3, 100);
    rng_t rng(41);
    const Graph g = sample_graph(pmf, 300, rng).graph;
    if (is_connected(g)) {
        const int d = diameter(g);
        for (int v = 0; v < g.n; v += 17) REQUIRE(eccentricity(g, v) <= d);
        rng_t rng2(42);
        REQUIRE(diameter_lower_bound(g, 5, rng2) <= d);
    }
}

TEST_CASE("expose_cluster generation accounting") {
    const ClusterGrowth k4 = expose_cluster(testing::complete_graph(4), 0, 100);
    REQUIRE(k4.generation_sizes == std::vector<std::int64_t>{1, 3});
    REQUIRE(k4.exposed == 4);

    const ClusterGrowth c6 = expose_cluster(testing::cycle_graph(6), 2, 100);
    REQUIRE(c6.generation_sizes == std::vector<std::int64_t>{1, 2, 2, 1});
    REQUIRE(c6.collisions == 1);
    REQUIRE(c6.exposed == 6);

    // stops at a generation boundary once the budget is reached
    const ClusterGrowth partial = expose_cluster(testing::cycle_graph(10), 0, 4);
    REQUIRE(partial.generation_sizes == std::vector<std::int64_t>{1, 2, 2});
    REQUIRE(partial.exposed == 5);
}

TEST_CASE("two-generation growth ratio tracks the size-biased mean") {
    const DegreePmf pmf = power_law_pmf(3.5, 3, 1000000);
    const double nu = size_biased_mean(pmf);
    rng_t rng(53);
    const Graph g = sample_graph(pmf, 100000, rng).graph;
    double sum_ratio = 0;
    const int roots = 200;
    for (int i = 0; i < roots; ++i) {
        const int root = static_cast<int>(pick_below(rng, static_cast<std::uint64_t>(g.n)));
        const ClusterGrowth c = expose_cluster(g, root, g.n);
        REQUIRE(c.generation_sizes.size() >= 3);
        sum_ratio += static_cast<double>(c.generation_sizes[2]) /
                     static_cast<double>(c.generation_sizes[1]);
    }
    const double mean_ratio = sum_ratio / roots;
    REQUIRE_THAT(mean_ratio, WithinAbs(nu, 0.10 * nu));
}

TEST_CASE("stars_above thresholds") {
    const Graph star = testing::star_graph(50);  // n = 51, center degree 50
    REQUIRE(stars_above(star, 0.9) == std::vector<int>{0});  // 51^0.9 ~ 34.4
    const Graph k4 = testing::complete_graph(4);
    REQUIRE(stars_above(k4, 0.05) == std::vector<int>{0, 1, 2, 3});  // threshold ~ 1.07
    REQUIRE(stars_above(testing::cycle_graph(6), 0.9).empty());
    REQUIRE_THROWS_AS(stars_above(k4, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(stars_above(k4, 1.0), std::invalid_argument);
}

TEST_CASE("graph text format round-trips bit-exactly") {
    const DegreePmf pmf = power_law_pmf(3.5, 3, 50);
    rng_t rng(61);
    const Graph g = sample_graph(pmf, 120, rng).graph;

    std::ostringstream first;
    write_graph(g, first);
    std::istringstream in(first.str());
    const Graph back = read_graph(in);
    REQUIRE(back.n == g.n);
    REQUIRE(back.offsets == g.offsets);
    REQUIRE(back.neighbors == g.neighbors);
    std::ostringstream second;
    write_graph(back, second);
    REQUIRE(second.str() == first.str());

    // header and ordering contract on a tiny example
    std::ostringstream tiny;
    write_graph(make_graph(3, {{1, 2}, {0, 2}, {0, 1}}), tiny);
    REQUIRE(tiny.str() == "3 3\n0 1\n0 2\n1 2\n");
}

TEST_CASE("read_graph rejects malformed input") {
    std::istringstream unsorted("3 2\n1 2\n0 1\n");
    REQUIRE_THROWS_AS(read_graph(unsorted), std::invalid_argument);
    std::istringstream reversed("2 1\n1 0\n");
    REQUIRE_THROWS_AS(read_graph(reversed), std::invalid_argument);
    std::istringstream truncated("3 2\n0 1\n");
    REQUIRE_THROWS_AS(read_graph(truncated), std::invalid_argument);
}

TEST_CASE("make_graph validates edges") {
    REQUIRE_THROWS_AS(make_graph(3, {{0, 0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(make_graph(3, {{0, 3}}), std::invalid_argument);
    REQUIRE_THROWS_AS(make_graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
}
