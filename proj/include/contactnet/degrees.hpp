#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contactnet/errors.hpp"
#include "contactnet/rng.hpp"

namespace contactnet {

/// Compensated (Kahan) accumulator. Million-term tail sums lose ~1e-10
/// with naive accumulation; compensation keeps them at a few ulp.
struct kahan_sum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// Degree distribution on the integer support [k_min, k_max].
/// probs[i] is the probability of degree k_min + i.
struct DegreePmf {
    int k_min = 1;
    int k_max = 1;
    double alpha = 0.0;  // construction exponent, 0 if not power-law
    std::vector<double> probs;

    int support_size() const { return k_max - k_min + 1; }
    double prob(int k) const {
        if (k < k_min || k > k_max) return 0.0;
        return probs[static_cast<std::size_t>(k - k_min)];
    }
};

/// Same layout as DegreePmf; the distinct type marks that the support was
/// shifted down by one during size biasing.
struct SizeBiasedPmf {
    int k_min = 0;
    int k_max = 0;
    double alpha = 0.0;
    std::vector<double> probs;

    int support_size() const { return k_max - k_min + 1; }
    double prob(int k) const {
        if (k < k_min || k > k_max) return 0.0;
        return probs[static_cast<std::size_t>(k - k_min)];
    }
};

namespace detail {

inline void check_pmf_shape(int k_min, int k_max, std::size_t num_probs, const char* what) {
    if (k_max < k_min) throw std::invalid_argument(std::string(what) + ": k_max < k_min");
    if (num_probs != static_cast<std::size_t>(k_max - k_min + 1))
        throw std::invalid_argument(std::string(what) + ": probs length does not match support");
}

template <class Pmf>
void check_pmf(const Pmf& p, const char* what) {
    check_pmf_shape(p.k_min, p.k_max, p.probs.size(), what);
    kahan_sum total;
    for (double q : p.probs) {
        if (!(q >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative probability");
        total.add(q);
    }
    if (std::fabs(total.value() - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": probabilities do not sum to 1");
}

}  // namespace detail

/// p_k = k^(-alpha) / Z on [k_min, k_max], Z the truncated zeta sum.
inline DegreePmf power_law_pmf(double alpha, int k_min, int k_max) {
    if (!(alpha > 1.0)) throw std::invalid_argument("power_law_pmf: alpha must be > 1");
    if (k_min < 1) throw std::invalid_argument("power_law_pmf: k_min must be >= 1");
    if (k_max < k_min) throw std::invalid_argument("power_law_pmf: k_max must be >= k_min");

    DegreePmf p;
    p.k_min = k_min;
    p.k_max = k_max;
    p.alpha = alpha;
    p.probs.resize(static_cast<std::size_t>(k_max - k_min + 1));

    kahan_sum z;
    for (int k = k_min; k <= k_max; ++k) {
        const double w = std::pow(static_cast<double>(k), -alpha);
        p.probs[static_cast<std::size_t>(k - k_min)] = w;
        z.add(w);
    }
    const double inv_z = 1.0 / z.value();
    for (double& q : p.probs) q *= inv_z;
    return p;
}

/// mu = sum k p_k.
inline double mean_degree(const DegreePmf& p) {
    detail::check_pmf(p, "mean_degree");
    kahan_sum mu;
    for (int k = p.k_min; k <= p.k_max; ++k) mu.add(k * p.prob(k));
    return mu.value();
}

/// q_{k-1} = k p_k / mu.
inline SizeBiasedPmf size_biased(const DegreePmf& p) {
    detail::check_pmf(p, "size_biased");
    const double mu = mean_degree(p);
    SizeBiasedPmf q;
    q.k_min = p.k_min - 1;
    q.k_max = p.k_max - 1;
    q.alpha = p.alpha;
    q.probs.resize(p.probs.size());
    for (int k = p.k_min; k <= p.k_max; ++k)
        q.probs[static_cast<std::size_t>(k - p.k_min)] = k * p.prob(k) / mu;
    return q;
}

/// nu = sum over the size-biased law of (k-1) q_{k-1} = sum (k-1) k p_k / mu.
inline double size_biased_mean(const DegreePmf& p) {
    detail::check_pmf(p, "size_biased_mean");
    const double mu = mean_degree(p);
    kahan_sum acc;
    for (int k = p.k_min; k <= p.k_max; ++k) acc.add((k - 1.0) * k * p.prob(k));
    return acc.value() / mu;
}

/// Inverse-CDF table over the pmf support; one binary search per draw.
struct DegreeSampler {
    int k_min = 1;
    std::vector<double> cdf;

    explicit DegreeSampler(const DegreePmf& p) : k_min(p.k_min) {
        detail::check_pmf(p, "DegreeSampler");
        cdf.resize(p.probs.size());
        kahan_sum acc;
        for (std::size_t i = 0; i < p.probs.size(); ++i) {
            acc.add(p.probs[i]);
            cdf[i] = acc.value();
        }
        cdf.back() = 1.0;  // guard against rounding at the top end
    }

    int operator()(rng_t& rng) const {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return k_min + static_cast<int>(it - cdf.begin());
    }
};

struct DegreeSequence {
    std::vector<int> degrees;
    int resample_rounds = 0;  // whole-sequence rejections before an even sum
};

/// n i.i.d. draws from p, conditioned on an even sum by rejecting and
/// redrawing the entire sequence. Rejection keeps the conditional law exact.
inline DegreeSequence sample_degree_sequence(const DegreePmf& p, int n, rng_t& rng,
                                             int max_rounds = 10000) {
    if (n < 1) throw std::invalid_argument("sample_degree_sequence: n must be >= 1");
    detail::check_pmf(p, "sample_degree_sequence");
    const DegreeSampler draw(p);

    DegreeSequence out;
    out.degrees.resize(static_cast<std::size_t>(n));
    for (int round = 0; round < max_rounds; ++round) {
        std::int64_t sum = 0;
        for (auto& d : out.degrees) {
            d = draw(rng);
            sum += d;
        }
        if (sum % 2 == 0) {
            out.resample_rounds = round;
            return out;
        }
    }
    throw resource_limit_error(
        "sample_degree_sequence: resample limit exceeded; no even-sum sequence found in " +
        std::to_string(max_rounds) + " rounds");
}

inline void to_json(nlohmann::json& j, const DegreePmf& p) {
    j = nlohmann::json{{"k_min", p.k_min}, {"k_max", p.k_max}, {"alpha", p.alpha}, {"probs", p.probs}};
}

inline void from_json(const nlohmann::json& j, DegreePmf& p) {
    j.at("k_min").get_to(p.k_min);
    j.at("k_max").get_to(p.k_max);
    j.at("alpha").get_to(p.alpha);
    j.at("probs").get_to(p.probs);
    detail::check_pmf_shape(p.k_min, p.k_max, p.probs.size(), "DegreePmf");
}

inline void to_json(nlohmann::json& j, const SizeBiasedPmf& p) {
    j = nlohmann::json{{"k_min", p.k_min}, {"k_max", p.k_max}, {"alpha", p.alpha}, {"probs", p.probs}};
}

inline void from_json(const nlohmann::json& j, SizeBiasedPmf& p) {
    j.at("k_min").get_to(p.k_min);
    j.at("k_max").get_to(p.k_max);
    j.at("alpha").get_to(p.alpha);
    j.at("probs").get_to(p.probs);
    detail::check_pmf_shape(p.k_min, p.k_max, p.probs.size(), "SizeBiasedPmf");
}

}  // namespace contactnet
