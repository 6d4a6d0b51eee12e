#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "critnet/errors.hpp"
#include "critnet/fenwick.hpp"
#include "critnet/rng.hpp"

namespace critnet {

using AgentId = std::uint32_t;

enum class Direction { in, out };

/// Per-degree agent counts for one edge direction. Counts sum to the number
/// of agents.
struct DegreeHistogram {
    Direction direction = Direction::in;
    std::map<std::int64_t, std::int64_t> counts;
};

/// Complementary cumulative distribution over observed degrees:
/// ascending (k, P(degree >= k)) pairs, nonincreasing, first value 1.
inline std::vector<std::pair<std::int64_t, double>> histogram_ccdf(const DegreeHistogram& hist) {
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(hist.counts.size());
    std::int64_t total = 0;
    for (const auto& [degree, count] : hist.counts) total += count;
    std::int64_t at_least = total;
    for (const auto& [degree, count] : hist.counts) {
        out.emplace_back(degree, static_cast<double>(at_least) / static_cast<double>(total));
        at_least -= count;
    }
    return out;
}

/// Directed multigraph of trading agents with degree bookkeeping and
/// weighted preferential-attachment sampling.
///
/// Parallel edges are allowed, self-loops are not. Sampling weight for an
/// agent is degree+1 in the requested direction, so zero-degree agents stay
/// reachable; both weight indices update in O(log N) per edge operation.
class TradeGraph {
public:
    explicit TradeGraph(std::size_t n_agents) {
        if (n_agents < 2) {
            throw ConfigError("TradeGraph needs at least 2 agents, got " +
                              std::to_string(n_agents));
        }
        n_agents_ = n_agents;
        out_degree_.assign(n_agents, 0);
        in_degree_.assign(n_agents, 0);
        out_adjacency_.resize(n_agents);
        in_adjacency_.resize(n_agents);
        out_weights_.reset(n_agents, 1); // degree 0 + smoothing
        in_weights_.reset(n_agents, 1);
    }

    std::size_t n_agents() const { return n_agents_; }
    std::int64_t n_edges() const { return n_edges_; }

    std::int64_t out_degree(AgentId agent) const { return out_degree_[agent]; }
    std::int64_t in_degree(AgentId agent) const { return in_degree_[agent]; }

    void add_edge(AgentId source, AgentId target) {
        if (source == target) {
            throw ConfigError("self-loop rejected: agent " + std::to_string(source));
        }
        out_adjacency_[source][target] += 1;
        in_adjacency_[target][source] += 1;
        out_degree_[source] += 1;
        in_degree_[target] += 1;
        out_weights_.add(source, 1);
        in_weights_.add(target, 1);
        n_edges_ += 1;
    }

    /// Removes every in-edge of `target` and returns the affected sources
    /// with multiplicities, sorted by source id. No-op on a target without
    /// in-edges.
    std::vector<std::pair<AgentId, std::int64_t>> remove_in_edges(AgentId target) {
        std::vector<std::pair<AgentId, std::int64_t>> removed;
        auto& incoming = in_adjacency_[target];
        if (incoming.empty()) return removed;
        removed.reserve(incoming.size());
        for (const auto& [source, multiplicity] : incoming) {
            removed.emplace_back(source, multiplicity);
        }
        std::sort(removed.begin(), removed.end());
        for (const auto& [source, multiplicity] : removed) {
            out_adjacency_[source].erase(target);
            out_degree_[source] -= multiplicity;
            out_weights_.add(source, -multiplicity);
        }
        const std::int64_t k_in = in_degree_[target];
        incoming.clear();
        in_degree_[target] = 0;
        in_weights_.add(target, -k_in);
        n_edges_ -= k_in;
        return removed;
    }

    /// Draws an agent with probability proportional to degree+1 in the given
    /// direction, optionally restricted to agents other than `exclude`.
    AgentId sample_preferential(Direction direction, Rng& rng,
                                std::optional<AgentId> exclude = std::nullopt) {
        FenwickTree& weights = (direction == Direction::in) ? in_weights_ : out_weights_;
        std::int64_t masked = 0;
        if (exclude) {
            masked = weights.weight(*exclude);
            weights.add(*exclude, -masked);
        }
        const std::int64_t total = weights.total();
        const auto target = static_cast<std::int64_t>(
            rng.uniform_below(static_cast<std::uint64_t>(total)));
        const auto picked = static_cast<AgentId>(weights.pick(target));
        if (exclude) weights.add(*exclude, masked);
        return picked;
    }

    template <typename Fn>
    void for_each_edge(Fn&& fn) const {
        for (AgentId source = 0; source < n_agents_; ++source) {
            for (const auto& [target, multiplicity] : out_adjacency_[source]) {
                fn(source, target, multiplicity);
            }
        }
    }

    DegreeHistogram degree_histogram(Direction direction) const {
        DegreeHistogram hist;
        hist.direction = direction;
        const auto& degrees = (direction == Direction::in) ? in_degree_ : out_degree_;
        for (std::size_t i = 0; i < n_agents_; ++i) hist.counts[degrees[i]] += 1;
        return hist;
    }

    std::vector<std::pair<std::int64_t, double>> degree_ccdf(Direction direction) const {
        return histogram_ccdf(degree_histogram(direction));
    }

    /// Full recount of degrees and edge total from the adjacency multiset.
    /// Test oracle for the cached counters.
    struct Recount {
        std::vector<std::int64_t> out_degree;
        std::vector<std::int64_t> in_degree;
        std::int64_t n_edges = 0;
    };

    Recount recount() const {
        Recount r;
        r.out_degree.assign(n_agents_, 0);
        r.in_degree.assign(n_agents_, 0);
        for_each_edge([&](AgentId source, AgentId target, std::int64_t multiplicity) {
            r.out_degree[source] += multiplicity;
            r.in_degree[target] += multiplicity;
            r.n_edges += multiplicity;
        });
        return r;
    }

private:
    std::size_t n_agents_ = 0;
    std::int64_t n_edges_ = 0;
    std::vector<std::int64_t> out_degree_;
    std::vector<std::int64_t> in_degree_;
    // multiplicity per distinct (source, target) pair, indexed both ways
    std::vector<std::unordered_map<AgentId, std::int64_t>> out_adjacency_;
    std::vector<std::unordered_map<AgentId, std::int64_t>> in_adjacency_;
    FenwickTree out_weights_;
    FenwickTree in_weights_;
};

} // namespace critnet
