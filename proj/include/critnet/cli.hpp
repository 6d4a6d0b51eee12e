#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "critnet/criticality.hpp"
#include "critnet/economy.hpp"
#include "critnet/errors.hpp"
#include "critnet/graph.hpp"
#include "critnet/io.hpp"
#include "critnet/stats.hpp"

namespace critnet {

inline constexpr const char* kVersion = "0.1.0";

/// Exponent band that drawdown fits are compared against.
inline constexpr double kPredictedBandLow = 2.15;
inline constexpr double kPredictedBandHigh = 3.05;

/// Degree exponent from a degree CCDF: log-log regression over the scaling
/// region (degree >= 1, tail probability >= min_prob to keep the noisy deep
/// tail out), converted from the cumulative slope to the density exponent.
/// NaN when fewer than 5 usable points remain.
inline double fit_degree_exponent(
    const std::vector<std::pair<std::int64_t, double>>& ccdf_points,
    double min_prob = 0.005) {
    std::vector<double> log_k, log_p;
    for (const auto& [degree, prob] : ccdf_points) {
        if (degree >= 1 && prob >= min_prob) {
            log_k.push_back(std::log(static_cast<double>(degree)));
            log_p.push_back(std::log(prob));
        }
    }
    if (log_k.size() < 5) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - linear_fit(log_k, log_p).slope;
}

namespace detail {

inline std::int64_t config_int(std::string_view text, const std::string& key) {
    std::int64_t value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key + ": cannot parse integer '" + std::string(text) + "'");
    }
    return value;
}

inline std::uint64_t config_uint(std::string_view text, const std::string& key) {
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key + ": cannot parse unsigned integer '" + std::string(text) + "'");
    }
    return value;
}

inline double config_double(std::string_view text, const std::string& key) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

} // namespace detail

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    SimConfig config;               // d_threshold < 0 means auto
    std::size_t replicas = 1;
    std::filesystem::path out_dir;
};

struct ReplicaSummary {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::filesystem::path dir;
    std::size_t n_avalanches = 0;
    std::size_t n_samples = 0;
    double m_ccdf = std::numeric_limits<double>::quiet_NaN(); // cumulative-size exponent
    double fit_r_squared = std::numeric_limits<double>::quiet_NaN();
    double measured_gamma = std::numeric_limits<double>::quiet_NaN();
    double predicted_m = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t degree_violations = 0;
    std::uint64_t energy_violations = 0;
    std::uint64_t solvency_violations = 0;
};

struct SimulateOutcome {
    double d_threshold = 0.0; // resolved
    std::filesystem::path manifest_path;
    std::vector<ReplicaSummary> replicas;
};

/// Fitted cumulative avalanche-size exponent: regression on the size CCDF
/// from the fixed integer cutoff xmin=1. The fit record's density-convention
/// exponent sits one power above the cumulative slope.
inline PowerLawFit fit_avalanche_sizes(const std::vector<AvalancheRecord>& avalanches) {
    std::vector<double> sizes;
    sizes.reserve(avalanches.size());
    for (const AvalancheRecord& a : avalanches) {
        sizes.push_back(static_cast<double>(a.size_s));
    }
    return fit_power_law(std::move(sizes), FitMethod::ccdf_regression, 1.0);
}

/// Maps manifest/config-file keys onto simulate options. Unknown keys are
/// ignored so a full run manifest can be replayed directly.
inline void apply_manifest(SimulateOptions& options, const RunManifest& manifest) {
    if (const auto* v = manifest.find("agents")) {
        options.config.n_agents = static_cast<std::size_t>(detail::config_uint(*v, "agents"));
    }
    if (const auto* v = manifest.find("k_out")) {
        options.config.k0 = detail::config_int(*v, "k_out");
    }
    if (const auto* v = manifest.find("gamma")) {
        options.config.gamma_target = detail::config_double(*v, "gamma");
    }
    if (const auto* v = manifest.find("d_th")) {
        options.config.d_threshold =
            (*v == "auto") ? -1.0 : detail::config_double(*v, "d_th");
    }
    if (const auto* v = manifest.find("steps")) {
        options.config.n_steps = detail::config_uint(*v, "steps");
    }
    if (const auto* v = manifest.find("stride")) {
        options.config.sample_stride = detail::config_uint(*v, "stride");
    }
    if (const auto* v = manifest.find("seed")) {
        options.config.seed = detail::config_uint(*v, "seed");
    }
    if (const auto* v = manifest.find("aggregator")) {
        options.config.aggregator = aggregator_from_string(*v);
    }
    if (const auto* v = manifest.find("snapshots")) {
        options.config.snapshot_count =
            static_cast<std::size_t>(detail::config_uint(*v, "snapshots"));
    }
    if (const auto* v = manifest.find("replicas")) {
        options.replicas = static_cast<std::size_t>(detail::config_uint(*v, "replicas"));
    }
}

inline SimulateOutcome run_simulate(const SimulateOptions& options) {
    options.config.validate();
    if (options.replicas < 1) throw ConfigError("replicas must be at least 1");
    if (options.out_dir.empty()) throw ConfigError("output directory required");

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) {
        throw DataError("cannot create output directory '" + options.out_dir.string() +
                        "': " + ec.message());
    }

    RunManifest manifest;
    manifest.set("command", "simulate");
    manifest.set("version", kVersion);
    manifest.set("created_utc", format_utc_now());
    manifest.set("agents", std::to_string(options.config.n_agents));
    manifest.set("k_out", std::to_string(options.config.k0));
    manifest.set("gamma", format_double(options.config.gamma_target));
    manifest.set("d_th", options.config.threshold_is_auto()
                             ? std::string("auto")
                             : format_double(options.config.d_threshold));
    manifest.set("d_th_resolved", format_double(options.config.resolve_threshold()));
    manifest.set("steps", std::to_string(options.config.n_steps));
    manifest.set("stride", std::to_string(options.config.sample_stride));
    manifest.set("seed", std::to_string(options.config.seed));
    manifest.set("aggregator", to_string(options.config.aggregator));
    manifest.set("snapshots", std::to_string(options.config.snapshot_count));
    manifest.set("replicas", std::to_string(options.replicas));
    manifest.set("out_dir", options.out_dir.string());

    SimulateOutcome outcome;
    outcome.d_threshold = options.config.resolve_threshold();
    outcome.replicas.resize(options.replicas);

    const auto run_replica = [&](std::size_t k) {
        SimConfig config = options.config;
        config.seed = options.config.seed + k;
        const std::filesystem::path dir =
            options.replicas == 1 ? options.out_dir
                                  : options.out_dir / ("rep" + std::to_string(k));
        std::filesystem::create_directories(dir);
        const SimResult result = run(config);
        write_index_csv(dir / "index_series.csv", result.index_series);
        write_avalanche_csv(dir / "avalanches.csv", result.avalanches);
        write_graph_snapshot(dir / "graph_final.txt", result.graph, config.n_steps);

        ReplicaSummary& summary = outcome.replicas[k];
        summary.index = k;
        summary.seed = config.seed;
        summary.dir = dir;
        summary.n_avalanches = result.avalanches.size();
        summary.n_samples = result.index_series.size();
        summary.degree_violations = result.degree_violations;
        summary.energy_violations = result.energy_violations;
        summary.solvency_violations = result.solvency_violations;
        try {
            const PowerLawFit fit = fit_avalanche_sizes(result.avalanches);
            summary.m_ccdf = fit.exponent - 1.0;
            summary.fit_r_squared = fit.r_squared;
        } catch (const InsufficientDataError&) {
            // too few avalanches to fit; summary keeps NaN
        }
        summary.measured_gamma = fit_degree_exponent(result.graph.degree_ccdf(Direction::in));
        if (std::isfinite(summary.measured_gamma)) {
            summary.predicted_m = predicted_exponent(summary.measured_gamma);
        }
    };

    if (options.replicas == 1) {
        run_replica(0);
    } else {
        std::vector<std::exception_ptr> failures(options.replicas);
        std::vector<std::thread> workers;
        workers.reserve(options.replicas);
        for (std::size_t k = 0; k < options.replicas; ++k) {
            workers.emplace_back([&, k]() {
                try {
                    run_replica(k);
                } catch (...) {
                    failures[k] = std::current_exception();
                }
            });
        }
        for (std::thread& w : workers) w.join();
        for (const std::exception_ptr& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    for (std::size_t k = 0; k < options.replicas; ++k) {
        const std::string prefix =
            options.replicas == 1 ? std::string()
                                  : "rep" + std::to_string(k) + "/";
        const std::string suffix =
            options.replicas == 1 ? std::string() : "_rep" + std::to_string(k);
        manifest.set("index_csv" + suffix, prefix + "index_series.csv");
        manifest.set("avalanches_csv" + suffix, prefix + "avalanches.csv");
        manifest.set("graph_snapshot" + suffix, prefix + "graph_final.txt");
    }
    manifest.set("finished_utc", format_utc_now());
    outcome.manifest_path = options.out_dir / "manifest.txt";
    write_manifest(outcome.manifest_path, manifest);
    return outcome;
}

inline void print_simulate_summary(const SimulateOutcome& outcome, std::ostream& out) {
    out << "d_th=" << format_double(outcome.d_threshold) << "\n";
    for (const ReplicaSummary& r : outcome.replicas) {
        out << "replica " << r.index << ": seed=" << r.seed
            << " avalanches=" << r.n_avalanches << " samples=" << r.n_samples;
        if (std::isfinite(r.m_ccdf)) {
            out << " m=" << format_double(r.m_ccdf)
                << " r_squared=" << format_double(r.fit_r_squared);
        } else {
            out << " m=n/a";
        }
        if (std::isfinite(r.measured_gamma)) {
            out << " gamma=" << format_double(r.measured_gamma)
                << " predicted_m=" << format_double(r.predicted_m);
        } else {
            out << " gamma=n/a";
        }
        out << "\n";
    }
    out << "manifest=" << outcome.manifest_path.string() << "\n";
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::filesystem::path input;
    std::string date_column = "date";
    std::string close_column = "close";
    std::optional<double> xmin; // nullopt selects the cutoff automatically
    FitMethod method = FitMethod::ccdf_regression;
    std::filesystem::path out_dir;
};

struct AnalyzeOutcome {
    std::string dataset_name;
    std::size_t n_rows = 0;
    std::size_t dropped_rows = 0;
    std::size_t n_returns = 0;
    std::size_t excluded_returns = 0;
    std::size_t n_events = 0;
    PowerLawFit fit;
    double m_ccdf = std::numeric_limits<double>::quiet_NaN();
    bool within_band = false;
    std::filesystem::path events_path;
    std::filesystem::path ccdf_path;
    std::filesystem::path report_path;
};

inline AnalyzeOutcome run_analyze(const AnalyzeOptions& options) {
    if (options.out_dir.empty()) throw ConfigError("output directory required");
    if (options.xmin && !(*options.xmin > 0.0)) {
        throw ConfigError("xmin must be positive");
    }
    const IndexDataset dataset =
        ingest_csv(options.input, options.date_column, options.close_column, 30);
    const ReturnSeries returns = log_returns(dataset.closes);
    const std::vector<DrawdownEvent> events = extract_drawdowns(returns);
    if (events.size() < 30) {
        throw InsufficientDataError("found " + std::to_string(events.size()) +
                                    " drawdown events, need 30 to fit");
    }
    std::vector<double> magnitudes;
    magnitudes.reserve(events.size());
    for (const DrawdownEvent& e : events) magnitudes.push_back(e.magnitude);

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) {
        throw DataError("cannot create output directory '" + options.out_dir.string() +
                        "': " + ec.message());
    }

    AnalyzeOutcome outcome;
    outcome.dataset_name = dataset.name;
    outcome.n_rows = dataset.closes.size();
    outcome.dropped_rows = dataset.dropped_rows;
    outcome.n_returns = returns.values.size();
    outcome.excluded_returns = returns.excluded_count;
    outcome.n_events = events.size();
    outcome.fit = fit_power_law(magnitudes, options.method, options.xmin);
    outcome.m_ccdf = outcome.fit.exponent - 1.0;
    outcome.within_band =
        outcome.m_ccdf >= kPredictedBandLow && outcome.m_ccdf <= kPredictedBandHigh;

    outcome.events_path = options.out_dir / "events.csv";
    outcome.ccdf_path = options.out_dir / "ccdf.csv";
    outcome.report_path = options.out_dir / "fit_report.txt";
    write_drawdown_csv(outcome.events_path, events);
    write_ccdf_csv(outcome.ccdf_path, ccdf(magnitudes), "magnitude");
    write_fit_report(outcome.report_path, outcome.fit,
                     {{"m_ccdf", format_double(outcome.m_ccdf)},
                      {"band_low", format_double(kPredictedBandLow)},
                      {"band_high", format_double(kPredictedBandHigh)},
                      {"within_band", outcome.within_band ? "yes" : "no"},
                      {"n_events", std::to_string(outcome.n_events)},
                      {"dataset", outcome.dataset_name}});
    return outcome;
}

inline void print_analyze_summary(const AnalyzeOutcome& outcome, std::ostream& out) {
    out << "dataset=" << outcome.dataset_name << "\n";
    out << "rows=" << outcome.n_rows << " dropped=" << outcome.dropped_rows << "\n";
    out << "returns=" << outcome.n_returns << " excluded=" << outcome.excluded_returns
        << "\n";
    out << "events=" << outcome.n_events << "\n";
    out << "method=" << to_string(outcome.fit.method) << "\n";
    out << "xmin=" << format_double(outcome.fit.xmin) << "\n";
    out << "m_ccdf=" << format_double(outcome.m_ccdf) << "\n";
    out << "band=[" << format_double(kPredictedBandLow) << ","
        << format_double(kPredictedBandHigh) << "]"
        << " within_band=" << (outcome.within_band ? "yes" : "no") << "\n";
    out << "report=" << outcome.report_path.string() << "\n";
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
    double gamma = 2.34;
    std::int64_t k0 = 1;
    std::optional<double> d_threshold;
};

struct PredictOutcome {
    double gamma = 0.0;
    std::int64_t k0 = 1;
    double zeta_gamma = 0.0;        // degree-law normalization sum
    double zeta_gamma_plus_1 = 0.0; // enters the criticality condition
    CriticalSolution critical;
    double predicted_m = 0.0;
    std::optional<double> d_threshold;
    double omega = std::numeric_limits<double>::quiet_NaN();
    double offspring = std::numeric_limits<double>::quiet_NaN();
    std::string regime; // subcritical | critical | supercritical
};

inline PredictOutcome run_predict(const PredictOptions& options) {
    PredictOutcome outcome;
    outcome.gamma = options.gamma;
    outcome.k0 = options.k0;
    // zeta(gamma) must converge for the degree law k^-gamma to normalize;
    // this is where gamma <= 1 is rejected.
    outcome.zeta_gamma = zeta(options.gamma);
    outcome.zeta_gamma_plus_1 = zeta(options.gamma + 1.0);
    outcome.critical = critical_threshold(options.gamma, options.k0);
    outcome.predicted_m = predicted_exponent(options.gamma);
    if (options.d_threshold) {
        outcome.d_threshold = options.d_threshold;
        outcome.omega = omega_from_threshold(*options.d_threshold);
        const BranchingEstimate estimate =
            expected_offspring(options.gamma, options.k0, outcome.omega);
        outcome.offspring = estimate.expected_offspring;
        constexpr double kTolerance = 1e-9;
        if (outcome.offspring > 1.0 + kTolerance) {
            outcome.regime = "supercritical";
        } else if (outcome.offspring < 1.0 - kTolerance) {
            outcome.regime = "subcritical";
        } else {
            outcome.regime = "critical";
        }
    }
    return outcome;
}

inline void print_predict_report(const PredictOutcome& outcome, std::ostream& out) {
    out << "gamma=" << format_double(outcome.gamma) << "\n";
    out << "k0=" << outcome.k0 << "\n";
    out << "zeta_gamma=" << format_double(outcome.zeta_gamma) << "\n";
    out << "zeta_gamma_plus_1=" << format_double(outcome.zeta_gamma_plus_1) << "\n";
    out << "omega_critical=" << format_double(outcome.critical.omega) << "\n";
    out << "d_th_critical=" << format_double(outcome.critical.d_threshold) << "\n";
    out << "predicted_m=" << format_double(outcome.predicted_m) << "\n";
    if (outcome.d_threshold) {
        out << "d_th=" << format_double(*outcome.d_threshold) << "\n";
        out << "omega=" << format_double(outcome.omega) << "\n";
        out << "expected_offspring=" << format_double(outcome.offspring) << "\n";
        out << "regime=" << outcome.regime << "\n";
    }
}

} // namespace critnet
