#include <catch2/catch_amalgamated.hpp>

#include <critnet/criticality.hpp>
#include <critnet/rng.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace critnet;

namespace {

// Independent zeta oracle: long-double partial sum sandwiched by integral
// tail bounds: S_N + (N+1)^(1-s)/(s-1) <= zeta(s) <= S_N + N^(1-s)/(s-1).
struct ZetaBounds {
    double lower, upper;
};

ZetaBounds zeta_sandwich(double s, long long n_terms) {
    long double sum = 0.0L;
    for (long long n = n_terms; n >= 1; --n) {
        sum += std::pow(static_cast<long double>(n), static_cast<long double>(-s));
    }
    const long double lo_tail =
        std::pow(static_cast<long double>(n_terms + 1), static_cast<long double>(1.0 - s)) /
        static_cast<long double>(s - 1.0);
    const long double hi_tail =
        std::pow(static_cast<long double>(n_terms), static_cast<long double>(1.0 - s)) /
        static_cast<long double>(s - 1.0);
    return {static_cast<double>(sum + lo_tail), static_cast<double>(sum + hi_tail)};
}

} // namespace

TEST_CASE("zeta matches analytic anchors", "[criticality]") {
    const double pi = std::numbers::pi;
    CHECK(std::abs(zeta(2.0) - pi * pi / 6.0) < 1e-12);
    CHECK(std::abs(zeta(4.0) - pi * pi * pi * pi / 90.0) < 1e-12);
    CHECK(std::abs(zeta(3.0) - 1.2020569031595943) < 1e-12);
}

TEST_CASE("zeta sits inside independent sandwich bounds", "[criticality]") {
    for (double s : {1.2, 1.5, 2.34, 3.34, 4.0, 6.5}) {
        const long long n = s < 2.0 ? 2000000 : 2000;
        const auto [lower, upper] = zeta_sandwich(s, n);
        const double z = zeta(s);
        INFO("s=" << s << " bounds=[" << lower << "," << upper << "]");
        CHECK(z >= lower - 1e-12);
        CHECK(z <= upper + 1e-12);
    }
}

TEST_CASE("zeta domain and monotonicity", "[criticality]") {
    CHECK_THROWS_AS(zeta(1.0), std::domain_error);
    CHECK_THROWS_AS(zeta(0.5), std::domain_error);
    CHECK_THROWS_AS(zeta(-2.0), std::domain_error);
    double prev = zeta(1.05);
    for (double s = 1.15; s < 8.0; s += 0.1) {
        const double z = zeta(s);
        CHECK(z < prev);
        prev = z;
    }
}

TEST_CASE("omega round-trips the threshold", "[criticality]") {
    CHECK(omega_from_threshold(0.0) == 1.0);
    CHECK(std::abs(omega_from_threshold(0.1) - 11.0 / 9.0) < 1e-15);
    for (double d = 0.0; d < 0.995; d += 0.01) {
        CHECK(std::abs(threshold_from_omega(omega_from_threshold(d)) - d) < 1e-12);
    }
    CHECK_THROWS_AS(omega_from_threshold(-0.1), std::domain_error);
    CHECK_THROWS_AS(omega_from_threshold(1.0), std::domain_error);
    CHECK_THROWS_AS(threshold_from_omega(0.99), std::domain_error);
}

TEST_CASE("critical threshold solves omega^2 = k0^2 zeta(gamma+1)", "[criticality]") {
    const double pi = std::numbers::pi;
    const auto g3 = critical_threshold(3.0, 1);
    CHECK(std::abs(g3.omega - std::sqrt(pi * pi * pi * pi / 90.0)) < 1e-12);
    CHECK(std::abs(g3.d_threshold - 0.019774890029526204) < 1e-12);

    const auto g2 = critical_threshold(2.0, 1);
    CHECK(std::abs(g2.omega - std::sqrt(1.2020569031595943)) < 1e-12);
    CHECK(std::abs(g2.d_threshold - 0.045976) < 1e-6);

    // series limit: gamma large, zeta -> 1, omega -> 1, d_th -> 0
    const auto big = critical_threshold(50.0, 1);
    CHECK(big.omega >= 1.0);
    CHECK(big.omega - 1.0 < 1e-12);
    CHECK(big.d_threshold < 1e-12);

    for (double gamma : {2.0, 2.5, 3.0}) {
        const auto sol = critical_threshold(gamma, 1);
        CHECK(std::abs(sol.omega * sol.omega - zeta(gamma + 1.0)) < 1e-10);
        CHECK(std::abs(threshold_from_omega(sol.omega) - sol.d_threshold) < 1e-10);
        CHECK(std::abs(omega_from_threshold(sol.d_threshold) - sol.omega) < 1e-10);
    }

    // thinner tails tolerate a smaller threshold
    double prev = critical_threshold(1.5, 1).d_threshold;
    for (double gamma = 1.7; gamma < 6.0; gamma += 0.2) {
        const double d = critical_threshold(gamma, 1).d_threshold;
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("branching probability is a clamped power law", "[criticality]") {
    CHECK(branching_probability(1, 1.0, 2.5, 1) == 1.0);
    CHECK(std::abs(branching_probability(2, 1.1, 2.5, 1) - std::pow(2.2, -2.5)) < 1e-12);
    CHECK(std::abs(branching_probability(2, 1.1, 2.5, 1) - 0.139297) < 1e-6);
    double prev = 1.0;
    for (std::int64_t k = 2; k < 50; ++k) {
        const double p = branching_probability(k, 1.1, 2.5, 1);
        CHECK(p < prev);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
    CHECK_THROWS_AS(branching_probability(0, 1.1, 2.5, 1), std::domain_error);
}

TEST_CASE("expected offspring is one at the critical solution", "[criticality]") {
    for (double gamma : {2.0, 2.34, 2.5, 3.0}) {
        const auto sol = critical_threshold(gamma, 1);
        const auto est = expected_offspring(sol);
        INFO("gamma=" << gamma);
        CHECK(est.truncation_ok);
        CHECK(std::abs(est.expected_offspring - 1.0) < 1e-3);
        // sign bracket across the critical threshold
        const auto below = expected_offspring(gamma, 1, omega_from_threshold(sol.d_threshold + 0.01));
        const auto above = expected_offspring(gamma, 1, omega_from_threshold(sol.d_threshold - 0.01));
        CHECK(below.expected_offspring < 1.0);
        CHECK(above.expected_offspring > 1.0);
    }
}

TEST_CASE("expected offspring flags coarse truncation", "[criticality]") {
    const auto sol = critical_threshold(2.34, 1);
    const auto coarse = expected_offspring(sol.gamma, sol.k0, sol.omega, 50);
    CHECK_FALSE(coarse.truncation_ok);
    CHECK(coarse.expected_offspring < 1.0);
    CHECK(coarse.std_error > 1e-9);
}

TEST_CASE("predicted exponent follows m = 3 gamma / 2 - 1", "[criticality]") {
    CHECK(predicted_exponent(2.0) == 2.0);
    CHECK(std::abs(predicted_exponent(2.34) - 2.51) < 1e-12);
    CHECK(std::abs(predicted_exponent(2.1) - 2.15) < 1e-12);
    CHECK(std::abs(predicted_exponent(2.7) - 3.05) < 1e-12);
    // affine: midpoint interpolates exactly
    const double a = 2.2, b = 2.6;
    CHECK(std::abs(predicted_exponent((a + b) / 2.0) -
                   (predicted_exponent(a) + predicted_exponent(b)) / 2.0) < 1e-12);
    CHECK_THROWS_AS(predicted_exponent(0.0), std::domain_error);
}

TEST_CASE("cascade offspring law has the calibrated mean", "[criticality]") {
    const auto sol = critical_threshold(2.34, 1);
    const CascadeOffspringLaw law(sol.gamma, sol.omega, sol.k0);
    const double target = expected_offspring(sol).expected_offspring;
    CHECK(std::abs(law.mean_offspring() - target) < 1e-9);

    Rng rng(123);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(law(rng));
    CHECK(std::abs(sum / n - target) < 0.02);

    // a mean too large for the power-law count law must be rejected
    CHECK_THROWS_AS(CascadeOffspringLaw(4.0, 1.0, 2), std::domain_error);
}

TEST_CASE("critical binary branching shows Otter tree-size scaling", "[criticality]") {
    Rng rng(7);
    const auto sample = simulate_tree_sizes(
        60000, 1000000, rng, [](Rng& r) -> std::uint64_t { return r.bernoulli(0.5) ? 2u : 0u; });
    const auto fit = fit_power_law(sample.sizes, FitMethod::ccdf_regression, 4.0);
    CHECK(std::abs(fit.exponent - 1.5) < 0.2);
    CHECK(sample.n_capped < 200);
}

TEST_CASE("model offspring law at the critical point shows Otter scaling", "[criticality]") {
    Rng rng(11);
    const auto sol = critical_threshold(2.34, 1);
    const auto result = otter_check(2.34, sol.omega, 60000, rng);
    CHECK_FALSE(result.drift_warning);
    CHECK(std::abs(result.mean_offspring - 1.0) < 1e-6);
    CHECK(std::abs(result.pdf_exponent - 1.5) < 0.2);
    CHECK(result.fit.method == FitMethod::ccdf_regression);
    CHECK(result.n_capped < result.n_trees / 100);
}

TEST_CASE("off-critical offspring raises the drift warning", "[criticality]") {
    Rng rng(13);
    const auto sub = otter_check(2.34, omega_from_threshold(0.2), 20000, rng);
    CHECK(sub.drift_warning);
    CHECK(sub.mean_offspring < 0.95);
}
