#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "critnet/errors.hpp"

namespace critnet {

/// Log returns r_t = ln(x_t / x_{t-1}) of a positive level series.
/// `indices` holds the position of x_t in the input for each return;
/// `excluded_count` counts consecutive pairs dropped because a level was
/// not strictly positive.
struct ReturnSeries {
    std::vector<double> values;
    std::vector<std::size_t> indices;
    std::size_t excluded_count = 0;
};

inline ReturnSeries log_returns(const std::vector<double>& levels) {
    if (levels.size() < 2) {
        throw InsufficientDataError("log_returns needs at least 2 levels, got " +
                                    std::to_string(levels.size()));
    }
    ReturnSeries out;
    out.values.reserve(levels.size() - 1);
    for (std::size_t t = 1; t < levels.size(); ++t) {
        if (levels[t - 1] > 0.0 && levels[t] > 0.0) {
            out.values.push_back(std::log(levels[t] / levels[t - 1]));
            out.indices.push_back(t);
        } else {
            out.excluded_count += 1;
        }
    }
    if (out.values.empty()) {
        throw InsufficientDataError("log_returns: no usable consecutive positive pairs");
    }
    return out;
}

/// Elements at indices 0, stride, 2*stride, ...
template <typename T>
std::vector<T> stride_sample(const std::vector<T>& series, std::size_t stride) {
    if (stride == 0) throw ConfigError("stride must be >= 1");
    std::vector<T> out;
    out.reserve(series.size() / stride + 1);
    for (std::size_t i = 0; i < series.size(); i += stride) out.push_back(series[i]);
    return out;
}

/// Maximal run of strictly negative returns; the empirical stand-in for an
/// avalanche. Indices refer to positions in the return series, inclusive.
struct DrawdownEvent {
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    double magnitude = 0.0; // sum of |r_t| over the run
    std::size_t length = 0;
};

/// Zero returns break runs, so every index with a negative return belongs to
/// exactly one event.
inline std::vector<DrawdownEvent> extract_drawdowns(const ReturnSeries& returns) {
    std::vector<DrawdownEvent> events;
    std::size_t i = 0;
    const auto& r = returns.values;
    while (i < r.size()) {
        if (r[i] < 0.0) {
            DrawdownEvent ev;
            ev.start_index = i;
            while (i < r.size() && r[i] < 0.0) {
                ev.magnitude += -r[i];
                ++i;
            }
            ev.end_index = i - 1;
            ev.length = ev.end_index - ev.start_index + 1;
            events.push_back(ev);
        } else {
            ++i;
        }
    }
    return events;
}

/// Empirical complementary CDF: ascending (x, P(X >= x)) over distinct
/// values, nonincreasing, first entry 1.
inline std::vector<std::pair<double, double>> ccdf(std::vector<double> values) {
    if (values.empty()) throw InsufficientDataError("ccdf of empty sample");
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    const auto n = static_cast<double>(values.size());
    std::size_t i = 0;
    while (i < values.size()) {
        const double x = values[i];
        out.emplace_back(x, static_cast<double>(values.size() - i) / n);
        while (i < values.size() && values[i] == x) ++i;
    }
    return out;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = a + b x.
inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw InsufficientDataError("linear_fit needs >= 2 paired points");
    }
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw DataError("linear_fit: no variance in x");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

enum class FitMethod { ccdf_regression, mle };

/// Power-law fit record. `exponent` is always the PDF-convention exponent
/// (density ~ x^-exponent); for the regression method the raw fitted CCDF
/// slope is kept alongside, since the CCDF of such a law falls off one power
/// slower (slope -(exponent-1)). Keeping both pinned down avoids the usual
/// off-by-one ambiguity between cumulative and density exponents.
struct PowerLawFit {
    FitMethod method = FitMethod::mle;
    double exponent = 0.0;   // PDF convention
    double ccdf_slope = 0.0; // signed; fitted (regression) or implied (mle)
    double xmin = 0.0;
    double r_squared = std::numeric_limits<double>::quiet_NaN();      // regression only
    double log_likelihood = std::numeric_limits<double>::quiet_NaN(); // mle only
    std::size_t n_points = 0;
};

namespace detail {

inline PowerLawFit fit_tail_fixed_xmin(const std::vector<double>& sorted_values,
                                       FitMethod method, double xmin,
                                       std::size_t min_points) {
    auto lo = std::lower_bound(sorted_values.begin(), sorted_values.end(), xmin);
    const std::vector<double> tail(lo, sorted_values.end());
    if (tail.size() < min_points) {
        throw InsufficientDataError("fit_power_law: " + std::to_string(tail.size()) +
                                    " points >= xmin, need " + std::to_string(min_points));
    }
    if (tail.front() == tail.back()) {
        throw DataError("fit_power_law: no variance in tail values");
    }
    PowerLawFit fit;
    fit.method = method;
    // Record the effective cutoff: never below the smallest fitted point, so
    // log ratios stay finite and the recorded xmin matches the fitted tail.
    fit.xmin = std::max(xmin, tail.front());
    fit.n_points = tail.size();
    if (method == FitMethod::mle) {
        // Hill-type estimator: m = 1 + n / sum ln(x_i/xmin)
        double log_sum = 0.0;
        for (double x : tail) log_sum += std::log(x / fit.xmin);
        const auto n = static_cast<double>(tail.size());
        fit.exponent = 1.0 + n / log_sum;
        fit.ccdf_slope = -(fit.exponent - 1.0);
        fit.log_likelihood =
            n * std::log((fit.exponent - 1.0) / fit.xmin) - fit.exponent * log_sum;
    } else {
        const auto points = ccdf(tail);
        std::vector<double> log_x, log_p;
        log_x.reserve(points.size());
        log_p.reserve(points.size());
        for (const auto& [x, p] : points) {
            if (x <= 0.0) continue;
            log_x.push_back(std::log(x));
            log_p.push_back(std::log(p));
        }
        const LinearFit line = linear_fit(log_x, log_p);
        fit.ccdf_slope = line.slope;
        fit.exponent = 1.0 - line.slope; // CCDF slope -(m-1)
        fit.r_squared = line.r_squared;
    }
    return fit;
}

/// Kolmogorov-Smirnov distance between the tail sample and the fitted
/// continuous Pareto CDF with the fit's own exponent.
inline double ks_distance(const std::vector<double>& sorted_values, const PowerLawFit& fit) {
    auto lo = std::lower_bound(sorted_values.begin(), sorted_values.end(), fit.xmin);
    const std::size_t n = static_cast<std::size_t>(sorted_values.end() - lo);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = *(lo + i);
        const double model = 1.0 - std::pow(x / fit.xmin, -(fit.exponent - 1.0));
        const double emp_hi = static_cast<double>(i + 1) / static_cast<double>(n);
        const double emp_lo = static_cast<double>(i) / static_cast<double>(n);
        worst = std::max(worst, std::max(std::abs(emp_hi - model), std::abs(emp_lo - model)));
    }
    return worst;
}

} // namespace detail

/// Fits x^-m to the tail of `values`. xmin = nullopt selects the cutoff by
/// KS minimization over candidate values (Clauset-style); a fixed xmin fits
/// the tail at or above it. Requires >= 30 tail points.
inline PowerLawFit fit_power_law(std::vector<double> values, FitMethod method,
                                 std::optional<double> xmin = std::nullopt) {
    constexpr std::size_t kMinPoints = 30;
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return !(v > 0.0) || !std::isfinite(v); }),
                 values.end());
    if (values.size() < kMinPoints) {
        throw InsufficientDataError("fit_power_law: " + std::to_string(values.size()) +
                                    " positive points, need " + std::to_string(kMinPoints));
    }
    std::sort(values.begin(), values.end());
    if (xmin) {
        return detail::fit_tail_fixed_xmin(values, method, *xmin, kMinPoints);
    }
    // candidate xmins: distinct values leaving at least kMinPoints in the tail
    std::vector<double> candidates;
    for (std::size_t i = 0; i + kMinPoints <= values.size(); ++i) {
        if (i == 0 || values[i] != values[i - 1]) candidates.push_back(values[i]);
    }
    if (candidates.size() > 100) {
        std::vector<double> thinned;
        thinned.reserve(101);
        const double step = static_cast<double>(candidates.size() - 1) / 100.0;
        for (int j = 0; j <= 100; ++j) {
            const auto idx = static_cast<std::size_t>(std::lround(j * step));
            if (thinned.empty() || candidates[idx] != thinned.back()) {
                thinned.push_back(candidates[idx]);
            }
        }
        candidates = std::move(thinned);
    }
    std::optional<PowerLawFit> best;
    double best_ks = std::numeric_limits<double>::infinity();
    for (double cand : candidates) {
        PowerLawFit fit;
        try {
            fit = detail::fit_tail_fixed_xmin(values, method, cand, kMinPoints);
        } catch (const DataError&) {
            continue;
        }
        const double ks = detail::ks_distance(values, fit);
        if (ks < best_ks) {
            best_ks = ks;
            best = fit;
        }
    }
    if (!best) throw DataError("fit_power_law: no viable xmin candidate");
    return *best;
}

/// Moment summary plus Freedman-Diaconis histogram for PDF plots.
struct DistributionSummary {
    double mean = 0.0;
    double stddev = 0.0;          // sample standard deviation
    double skewness = 0.0;        // population-moment g1
    double excess_kurtosis = 0.0; // population-moment g2
    std::vector<double> bin_edges;
    std::vector<std::int64_t> bin_counts;
    std::size_t n = 0;
};

inline DistributionSummary summarize(const std::vector<double>& values,
                                     std::size_t bin_count = 0) {
    if (values.size() < 4) {
        throw InsufficientDataError("summarize needs >= 4 values, got " +
                                    std::to_string(values.size()));
    }
    DistributionSummary s;
    s.n = values.size();
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : values) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.stddev = std::sqrt(m2 * n / (n - 1.0));
    s.skewness = (m2 > 0.0) ? m3 / std::pow(m2, 1.5) : 0.0;
    s.excess_kurtosis = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;

    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front(), hi = sorted.back();
    if (bin_count == 0) {
        // Freedman-Diaconis width
        auto quantile = [&](double q) {
            const double pos = q * (n - 1.0);
            const auto idx = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(idx);
            return (idx + 1 < sorted.size()) ? sorted[idx] * (1.0 - frac) + sorted[idx + 1] * frac
                                             : sorted[idx];
        };
        const double iqr = quantile(0.75) - quantile(0.25);
        const double width = 2.0 * iqr / std::cbrt(n);
        bin_count = (width > 0.0 && hi > lo)
                        ? static_cast<std::size_t>(std::ceil((hi - lo) / width))
                        : 1;
        bin_count = std::clamp<std::size_t>(bin_count, 1, 400);
    }
    const double span = (hi > lo) ? hi - lo : 1.0;
    s.bin_edges.resize(bin_count + 1);
    for (std::size_t b = 0; b <= bin_count; ++b) {
        s.bin_edges[b] = lo + span * static_cast<double>(b) / static_cast<double>(bin_count);
    }
    s.bin_counts.assign(bin_count, 0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / span * static_cast<double>(bin_count));
        if (b >= bin_count) b = bin_count - 1;
        s.bin_counts[b] += 1;
    }
    return s;
}

} // namespace critnet
