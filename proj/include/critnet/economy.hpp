#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "critnet/criticality.hpp"
#include "critnet/errors.hpp"
#include "critnet/graph.hpp"
#include "critnet/rng.hpp"

namespace critnet {

/// Trade price as a function of the seller-buyer degree gap,
/// 2 / (1 + exp(-gap)), written as 1 + tanh(gap/2) so that
/// price(gap) + price(-gap) == 2 holds exactly in floating point.
inline double price_from_gap(double degree_gap) {
    return 1.0 + std::tanh(0.5 * degree_gap);
}

/// Prices for integer degree gaps. tanh saturates well inside +-64, so the
/// table clamps there and the extremes are exactly 0 and 2.
class PriceTable {
public:
    PriceTable() {
        for (int gap = 0; gap <= kRange; ++gap) {
            const double p = price_from_gap(static_cast<double>(gap));
            table_[static_cast<std::size_t>(kRange + gap)] = p;
            table_[static_cast<std::size_t>(kRange - gap)] = 2.0 - p;
        }
    }

    double operator()(std::int64_t gap) const {
        const auto clamped = std::clamp<std::int64_t>(gap, -kRange, kRange);
        return table_[static_cast<std::size_t>(clamped + kRange)];
    }

private:
    static constexpr std::int64_t kRange = 64;
    std::array<double, 2 * kRange + 1> table_{};
};

/// An agent stays solvent while its trade surplus k_out - k_in exceeds the
/// tolerated fraction of its total turnover k_out + k_in. Equivalently,
/// solvency holds while k_out > omega * k_in with omega = (1+d_th)/(1-d_th).
/// Isolated agents (turnover 0) are solvent by convention.
inline bool solvent(std::int64_t k_out, std::int64_t k_in, double d_threshold) {
    const std::int64_t turnover = k_out + k_in;
    if (turnover == 0) return true;
    return static_cast<double>(k_out - k_in) > d_threshold * static_cast<double>(turnover);
}

enum class Aggregator { assets, absolute, net };

inline const char* to_string(Aggregator aggregator) {
    switch (aggregator) {
        case Aggregator::absolute: return "absolute";
        case Aggregator::net: return "net";
        case Aggregator::assets: break;
    }
    return "assets";
}

inline Aggregator aggregator_from_string(std::string_view name) {
    if (name == "assets") return Aggregator::assets;
    if (name == "absolute") return Aggregator::absolute;
    if (name == "net") return Aggregator::net;
    throw ConfigError("unknown aggregator '" + std::string(name) +
                      "' (expected assets, absolute, or net)");
}

/// Per-agent balance of all open trades at current prices. Every edge moves
/// multiplicity * (1 - price) to the seller and the exact negation to the
/// buyer, so `total` is zero up to summation rounding.
struct EnergyReport {
    std::vector<double> energy;
    double alpha_mean = std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
};

inline EnergyReport internal_energy(const TradeGraph& graph, const PriceTable& prices) {
    EnergyReport report;
    report.energy.assign(graph.n_agents(), 0.0);
    double alpha_sum = 0.0;
    graph.for_each_edge([&](AgentId source, AgentId target, std::int64_t multiplicity) {
        const std::int64_t gap = graph.out_degree(source) - graph.in_degree(target);
        const double alpha = prices(gap);
        const double flow = static_cast<double>(multiplicity) * (1.0 - alpha);
        report.energy[source] += flow;
        report.energy[target] -= flow;
        alpha_sum += static_cast<double>(multiplicity) * alpha;
    });
    if (graph.n_edges() > 0) {
        report.alpha_mean = alpha_sum / static_cast<double>(graph.n_edges());
    }
    for (double e : report.energy) report.total += e;
    return report;
}

/// Scalar market index from the per-agent balances: sum of positive
/// balances (assets), half the absolute sum (traded volume at risk), or the
/// plain sum (net, zero up to rounding).
inline double aggregate_index(const std::vector<double>& energy, Aggregator aggregator) {
    double value = 0.0;
    switch (aggregator) {
        case Aggregator::assets:
            for (double e : energy) value += std::max(e, 0.0);
            break;
        case Aggregator::absolute:
            for (double e : energy) value += std::abs(e);
            value *= 0.5;
            break;
        case Aggregator::net:
            for (double e : energy) value += e;
            break;
    }
    return value;
}

struct AvalancheRecord {
    std::uint64_t trigger_step = 0;
    std::uint64_t size_s = 0;       // agents that collapsed
    std::uint64_t node_count_r = 0; // distinct agents examined
    std::uint64_t edges_removed = 0;
};

/// Collapses the trigger agent and propagates: a collapsing agent loses all
/// incoming edges, which lowers the out-degree of each supplier, which may
/// push suppliers past the threshold in turn. Suppliers are re-examined
/// breadth-first until every touched agent is solvent. The trigger must be
/// insolvent when called. When `touched_out` is given it receives the
/// distinct agents examined, in first-examination order.
inline AvalancheRecord propagate_avalanche(TradeGraph& graph, AgentId trigger,
                                           double d_threshold,
                                           std::vector<AgentId>* touched_out = nullptr) {
    if (solvent(graph.out_degree(trigger), graph.in_degree(trigger), d_threshold)) {
        throw std::logic_error("propagate_avalanche: trigger agent " +
                               std::to_string(trigger) + " is solvent");
    }
    AvalancheRecord record;
    if (touched_out) touched_out->clear();
    std::vector<char> queued(graph.n_agents(), 0);
    std::vector<char> examined(graph.n_agents(), 0);
    std::deque<AgentId> frontier;
    frontier.push_back(trigger);
    queued[trigger] = 1;
    while (!frontier.empty()) {
        const AgentId agent = frontier.front();
        frontier.pop_front();
        queued[agent] = 0;
        if (!examined[agent]) {
            examined[agent] = 1;
            record.node_count_r += 1;
            if (touched_out) touched_out->push_back(agent);
        }
        if (solvent(graph.out_degree(agent), graph.in_degree(agent), d_threshold)) {
            continue;
        }
        record.size_s += 1;
        for (const auto& [source, multiplicity] : graph.remove_in_edges(agent)) {
            record.edges_removed += static_cast<std::uint64_t>(multiplicity);
            if (!queued[source]) {
                queued[source] = 1;
                frontier.push_back(source);
            }
        }
    }
    return record;
}

struct SimConfig {
    std::size_t n_agents = 2000;
    std::int64_t k0 = 1;          // starting edges per agent
    double gamma_target = 2.34;   // degree exponent aimed for by auto threshold
    double d_threshold = -1.0;    // negative requests the critical value
    std::uint64_t n_steps = 100000;
    std::uint64_t sample_stride = 5;
    std::uint64_t seed = 1;
    Aggregator aggregator = Aggregator::assets;
    std::size_t snapshot_count = 0; // in-degree histograms, evenly spaced

    bool threshold_is_auto() const { return d_threshold < 0.0; }

    void validate() const {
        if (n_agents < 2) {
            throw ConfigError("n_agents must be at least 2, got " + std::to_string(n_agents));
        }
        if (k0 < 1) {
            throw ConfigError("k0 must be at least 1, got " + std::to_string(k0));
        }
        if (!(gamma_target > 0.0)) {
            throw ConfigError("gamma_target must be positive, got " +
                              std::to_string(gamma_target));
        }
        if (!threshold_is_auto() && !(d_threshold < 1.0)) {
            throw ConfigError("d_threshold must lie in [0,1), got " +
                              std::to_string(d_threshold));
        }
        if (sample_stride < 1) throw ConfigError("sample_stride must be at least 1");
    }

    /// The threshold actually used: the configured one, or the critical
    /// value for (gamma_target, k0) when set to auto.
    double resolve_threshold() const {
        if (!threshold_is_auto()) return d_threshold;
        return critical_threshold(gamma_target, k0).d_threshold;
    }
};

struct IndexSample {
    std::uint64_t step = 0;
    double index_value = 0.0;
    double alpha_mean = std::numeric_limits<double>::quiet_NaN();
};

struct SnapshotRecord {
    std::uint64_t step = 0;
    DegreeHistogram in_degrees;
};

struct SimResult {
    SimConfig config;            // as passed in
    double d_threshold = 0.0;    // resolved value used by the run
    std::vector<IndexSample> index_series;
    std::vector<AvalancheRecord> avalanches;
    std::vector<SnapshotRecord> snapshots;
    std::uint64_t degree_violations = 0;   // samples failing the integer degree balance
    std::uint64_t energy_violations = 0;   // samples where balances fail to cancel
    std::uint64_t solvency_violations = 0; // agents still insolvent after a cascade
    TradeGraph graph;            // final state

    SimResult() : graph(2) {}
};

/// Seeds the graph with k0 rounds of one outgoing edge per agent, targets
/// drawn in-preferentially from everyone else.
inline void build_initial(TradeGraph& graph, std::int64_t k0, Rng& rng) {
    std::vector<AgentId> order(graph.n_agents());
    std::iota(order.begin(), order.end(), AgentId{0});
    for (std::int64_t round = 0; round < k0; ++round) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (const AgentId source : order) {
            const AgentId target = graph.sample_preferential(Direction::in, rng, source);
            graph.add_edge(source, target);
        }
    }
}

/// One trading step: an out-preferential seller opens an edge to an
/// in-preferential buyer, and the buyer is checked against the threshold.
/// Returns the avalanche triggered by the new edge, if any.
inline std::optional<AvalancheRecord> step(TradeGraph& graph, double d_threshold, Rng& rng,
                                           std::vector<AgentId>* touched_out = nullptr) {
    const AgentId source = graph.sample_preferential(Direction::out, rng);
    const AgentId target = graph.sample_preferential(Direction::in, rng, source);
    graph.add_edge(source, target);
    if (solvent(graph.out_degree(target), graph.in_degree(target), d_threshold)) {
        if (touched_out) touched_out->clear();
        return std::nullopt;
    }
    return propagate_avalanche(graph, target, d_threshold, touched_out);
}

inline SimResult run(const SimConfig& config) {
    config.validate();
    SimResult result;
    result.config = config;
    result.d_threshold = config.resolve_threshold();
    result.graph = TradeGraph(config.n_agents);

    Rng rng(config.seed);
    build_initial(result.graph, config.k0, rng);

    std::vector<std::uint64_t> snapshot_steps;
    if (config.snapshot_count > 0) {
        const auto count = static_cast<std::uint64_t>(config.snapshot_count);
        for (std::uint64_t i = 1; i <= count; ++i) {
            snapshot_steps.push_back(config.n_steps * i / count);
        }
        snapshot_steps.erase(std::unique(snapshot_steps.begin(), snapshot_steps.end()),
                             snapshot_steps.end());
        if (snapshot_steps.front() == 0) snapshot_steps.erase(snapshot_steps.begin());
    }
    std::size_t next_snapshot = 0;

    const PriceTable prices;
    result.index_series.reserve(config.n_steps / config.sample_stride);

    std::vector<AgentId> touched;
    for (std::uint64_t t = 1; t <= config.n_steps; ++t) {
        if (auto avalanche = step(result.graph, result.d_threshold, rng, &touched)) {
            avalanche->trigger_step = t;
            result.avalanches.push_back(*avalanche);
            for (const AgentId agent : touched) {
                if (!solvent(result.graph.out_degree(agent), result.graph.in_degree(agent),
                             result.d_threshold)) {
                    result.solvency_violations += 1;
                }
            }
        }
        if (t % config.sample_stride == 0) {
            const EnergyReport report = internal_energy(result.graph, prices);
            IndexSample sample;
            sample.step = t;
            sample.index_value = aggregate_index(report.energy, config.aggregator);
            sample.alpha_mean = report.alpha_mean;
            result.index_series.push_back(sample);

            std::int64_t out_total = 0, in_total = 0;
            for (AgentId a = 0; a < result.graph.n_agents(); ++a) {
                out_total += result.graph.out_degree(a);
                in_total += result.graph.in_degree(a);
            }
            if (out_total != result.graph.n_edges() || in_total != result.graph.n_edges()) {
                result.degree_violations += 1;
            }
            const double slack =
                1e-9 * (1.0 + static_cast<double>(result.graph.n_edges()));
            if (!(std::abs(report.total) <= slack)) {
                result.energy_violations += 1;
            }
        }
        if (next_snapshot < snapshot_steps.size() && t == snapshot_steps[next_snapshot]) {
            SnapshotRecord snap;
            snap.step = t;
            snap.in_degrees = result.graph.degree_histogram(Direction::in);
            result.snapshots.push_back(std::move(snap));
            next_snapshot += 1;
        }
    }
    return result;
}

} // namespace critnet
