#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "critnet/errors.hpp"
#include "critnet/rng.hpp"
#include "critnet/stats.hpp"

namespace critnet {

/// Riemann zeta on (1, inf) by partial summation with a midpoint-rule tail.
///
/// The tail sum_{n>N} n^-s is replaced by the integral from N+1/2, whose
/// midpoint error is bounded by (s/24) * (N-1/2)^-(s+1); N is chosen so that
/// bound stays below ~5e-14, giving at least 1e-12 absolute accuracy for
/// s >= 1.1. Kahan compensation keeps the partial sum's rounding in check.
inline double zeta(double s) {
    if (!(s > 1.0)) {
        throw std::domain_error("zeta(s) requires s > 1, got " + std::to_string(s));
    }
    constexpr double kTolerance = 5e-14;
    double n_terms = std::pow(s / (24.0 * kTolerance), 1.0 / (s + 1.0)) + 1.0;
    n_terms = std::min(n_terms, 2e7);
    const auto cutoff = static_cast<std::int64_t>(n_terms);
    double sum = 0.0, carry = 0.0;
    for (std::int64_t n = cutoff; n >= 1; --n) { // ascending magnitude
        const double term = std::pow(static_cast<double>(n), -s) - carry;
        const double next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    const double half = static_cast<double>(cutoff) + 0.5;
    return sum + std::pow(half, 1.0 - s) / (s - 1.0);
}

/// sum_{k=1}^{k_max} k^-s, smallest terms first.
inline double truncated_power_sum(double s, std::int64_t k_max) {
    double sum = 0.0;
    for (std::int64_t k = k_max; k >= 1; --k) {
        sum += std::pow(static_cast<double>(k), -s);
    }
    return sum;
}

/// Degree-ratio form of the solvency boundary: omega = (1+d)/(1-d).
inline double omega_from_threshold(double d_threshold) {
    if (!(d_threshold >= 0.0 && d_threshold < 1.0)) {
        throw std::domain_error("threshold must lie in [0,1), got " +
                                std::to_string(d_threshold));
    }
    return (1.0 + d_threshold) / (1.0 - d_threshold);
}

inline double threshold_from_omega(double omega) {
    if (!(omega >= 1.0)) {
        throw std::domain_error("omega must be >= 1, got " + std::to_string(omega));
    }
    return (omega - 1.0) / (omega + 1.0);
}

/// Solution of the criticality condition omega^2 = k0^2 zeta(gamma+1).
struct CriticalSolution {
    double gamma = 0.0;
    std::int64_t k0 = 1;
    double omega = 1.0;
    double d_threshold = 0.0;
};

/// Collapse threshold keeping the cascade branching ratio at one for a
/// degree exponent gamma and initial out-degree k0.
inline CriticalSolution critical_threshold(double gamma, std::int64_t k0) {
    if (!(gamma > 0.0)) {
        throw std::domain_error("critical_threshold requires gamma > 0");
    }
    if (k0 < 1) {
        throw std::domain_error("critical_threshold requires k0 >= 1");
    }
    CriticalSolution sol;
    sol.gamma = gamma;
    sol.k0 = k0;
    sol.omega = static_cast<double>(k0) * std::sqrt(zeta(gamma + 1.0));
    sol.d_threshold = threshold_from_omega(sol.omega);
    return sol;
}

/// Probability that losing one production connection collapses a neighbor
/// with in-degree k_in: k0 (omega k_in)^-gamma, clamped into [0,1].
inline double branching_probability(std::int64_t k_in, double omega, double gamma,
                                    std::int64_t k0) {
    if (k_in < 1) throw std::domain_error("branching_probability requires k_in >= 1");
    if (!(omega >= 1.0)) throw std::domain_error("branching_probability requires omega >= 1");
    const double p =
        static_cast<double>(k0) * std::pow(omega * static_cast<double>(k_in), -gamma);
    return std::clamp(p, 0.0, 1.0);
}

/// Expected collapsing neighbors per collapse, plus the truncation error
/// bound of the summation.
struct BranchingEstimate {
    double expected_offspring = 0.0;
    double std_error = 0.0; // truncation bound (closed form) or MC error
    std::int64_t n_trials = 0;
    bool truncation_ok = true;
};

/// Branching-ratio sum in the form whose unit root is exactly the
/// critical_threshold solution: (k0/omega)^2 sum_{k<=k_max} k^-(gamma+1).
/// Equals 1 at omega = k0 sqrt(zeta(gamma+1)) up to the truncated tail,
/// is > 1 below the critical threshold and < 1 above it.
inline BranchingEstimate expected_offspring(double gamma, std::int64_t k0, double omega,
                                            std::int64_t k_max = 200000) {
    if (!(gamma > 0.0)) throw std::domain_error("expected_offspring requires gamma > 0");
    if (!(omega >= 1.0)) throw std::domain_error("expected_offspring requires omega >= 1");
    if (k_max < 1) throw std::domain_error("expected_offspring requires k_max >= 1");
    const double scale = std::pow(static_cast<double>(k0) / omega, 2.0);
    BranchingEstimate est;
    est.expected_offspring = scale * truncated_power_sum(gamma + 1.0, k_max);
    // integral bound on the dropped tail sum_{k>k_max} k^-(gamma+1)
    est.std_error = scale * std::pow(static_cast<double>(k_max), -gamma) / gamma;
    est.n_trials = k_max;
    est.truncation_ok = est.std_error < 1e-9;
    return est;
}

inline BranchingEstimate expected_offspring(const CriticalSolution& solution,
                                            std::int64_t k_max = 200000) {
    return expected_offspring(solution.gamma, solution.k0, solution.omega, k_max);
}

/// Avalanche-size exponent predicted from the degree exponent:
/// m = (3/2) gamma - 1, the slope of the cumulative size distribution.
inline double predicted_exponent(double gamma) {
    if (!(gamma > 0.0)) throw std::domain_error("predicted_exponent requires gamma > 0");
    return 1.5 * gamma - 1.0;
}

/// Galton-Watson total-size sampler. `offspring` draws one child count.
/// Trees reaching `size_cap` nodes are abandoned and counted separately.
struct TreeSizeSample {
    std::vector<double> sizes;
    std::size_t n_capped = 0;
};

template <typename OffspringFn>
TreeSizeSample simulate_tree_sizes(std::size_t n_trees, std::size_t size_cap, Rng& rng,
                                   OffspringFn&& offspring) {
    TreeSizeSample out;
    out.sizes.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::uint64_t pending = 1;
        std::uint64_t size = 0;
        while (pending > 0 && size < size_cap) {
            pending -= 1;
            size += 1;
            pending += offspring(rng);
        }
        if (pending > 0) {
            out.n_capped += 1;
        } else {
            out.sizes.push_back(static_cast<double>(size));
        }
    }
    return out;
}

/// Offspring law of the cascade process. The per-class contribution
/// k * P(k) * P_br carries a k^-(gamma+1) tail, so induced-collapse counts
/// are drawn directly from P(j) = c * j^-(gamma+1) on [1, k_max] with the
/// zero class absorbing the rest; c is calibrated so the mean equals the
/// expected_offspring value at (gamma, omega, k0).
class CascadeOffspringLaw {
public:
    CascadeOffspringLaw(double gamma, double omega, std::int64_t k0,
                        std::int64_t k_max = 20000) {
        double tail_mass = 0.0, tail_mean = 0.0;
        std::vector<double> weight(static_cast<std::size_t>(k_max));
        for (std::int64_t j = 1; j <= k_max; ++j) {
            const double w = std::pow(static_cast<double>(j), -(gamma + 1.0));
            weight[static_cast<std::size_t>(j - 1)] = w;
            tail_mass += w;
            tail_mean += w * static_cast<double>(j);
        }
        const double target = expected_offspring(gamma, k0, omega, k_max).expected_offspring;
        const double scale = target / tail_mean;
        if (scale * tail_mass > 1.0) {
            throw std::domain_error("offspring mean too large for a power-law count law");
        }
        mean_offspring_ = target;
        // cumulative over j = 0, 1, ..., k_max
        cumulative_.resize(static_cast<std::size_t>(k_max) + 1);
        cumulative_[0] = 1.0 - scale * tail_mass;
        for (std::int64_t j = 1; j <= k_max; ++j) {
            cumulative_[static_cast<std::size_t>(j)] =
                cumulative_[static_cast<std::size_t>(j - 1)] +
                scale * weight[static_cast<std::size_t>(j - 1)];
        }
        cumulative_.back() = 1.0;
    }

    std::uint64_t operator()(Rng& rng) const {
        const double u = rng.uniform01();
        const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        return static_cast<std::uint64_t>(it - cumulative_.begin());
    }

    double mean_offspring() const { return mean_offspring_; }

private:
    std::vector<double> cumulative_;
    double mean_offspring_ = 0.0;
};

struct OtterResult {
    PowerLawFit fit;              // of tree sizes, PDF convention
    double pdf_exponent = 0.0;    // == fit.exponent; ~3/2 at criticality
    double mean_offspring = 0.0;  // analytic mean of the simulated law
    bool drift_warning = false;   // |mean_offspring - 1| > 0.05
    std::size_t n_trees = 0;
    std::size_t n_capped = 0;
};

/// Monte Carlo check of the r^-3/2 tree-size law for the cascade offspring
/// process at or near the critical point.
inline OtterResult otter_check(double offspring_gamma, double omega, std::size_t n_trees,
                               Rng& rng, std::int64_t k0 = 1,
                               std::size_t size_cap = 1000000) {
    const CascadeOffspringLaw law(offspring_gamma, omega, k0);
    OtterResult result;
    result.mean_offspring = law.mean_offspring();
    result.drift_warning = std::abs(law.mean_offspring() - 1.0) > 0.05;
    TreeSizeSample sample = simulate_tree_sizes(n_trees, size_cap, rng, law);
    result.n_trees = n_trees;
    result.n_capped = sample.n_capped;
    result.fit = fit_power_law(std::move(sample.sizes), FitMethod::ccdf_regression, 4.0);
    result.pdf_exponent = result.fit.exponent;
    return result;
}

} // namespace critnet
