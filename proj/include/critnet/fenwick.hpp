#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace critnet {

/// Fenwick (binary indexed) tree over non-negative integer weights.
///
/// Supports point update, total, and weighted pick in O(log n). Backs the
/// preferential-attachment samplers, where weights track degree counts and
/// change on every edge operation.
class FenwickTree {
public:
    FenwickTree() = default;

    FenwickTree(std::size_t n, std::int64_t initial_weight) { reset(n, initial_weight); }

    void reset(std::size_t n, std::int64_t initial_weight) {
        n_ = n;
        tree_.assign(n + 1, 0);
        total_ = 0;
        highest_pow2_ = 0;
        if (n_ > 0) {
            highest_pow2_ = 1;
            while (highest_pow2_ * 2 <= n_) highest_pow2_ *= 2;
        }
        if (initial_weight != 0) {
            for (std::size_t i = 1; i <= n; ++i) {
                tree_[i] += initial_weight;
                const std::size_t parent = i + (i & (~i + 1));
                if (parent <= n) tree_[parent] += tree_[i];
            }
            total_ = initial_weight * static_cast<std::int64_t>(n);
        }
    }

    std::size_t size() const { return n_; }
    std::int64_t total() const { return total_; }

    void add(std::size_t index, std::int64_t delta) {
        assert(index < n_);
        total_ += delta;
        for (std::size_t i = index + 1; i <= n_; i += i & (~i + 1)) {
            tree_[i] += delta;
        }
    }

    /// Sum of weights over [0, index].
    std::int64_t prefix_sum(std::size_t index) const {
        assert(index < n_);
        std::int64_t sum = 0;
        for (std::size_t i = index + 1; i > 0; i -= i & (~i + 1)) {
            sum += tree_[i];
        }
        return sum;
    }

    std::int64_t weight(std::size_t index) const {
        std::int64_t w = prefix_sum(index);
        if (index > 0) w -= prefix_sum(index - 1);
        return w;
    }

    /// Smallest index whose inclusive prefix sum exceeds target.
    /// Requires 0 <= target < total(); index i is returned with probability
    /// weight(i)/total(), so a zero-weight slot is never picked.
    std::size_t pick(std::int64_t target) const {
        assert(target >= 0 && target < total_);
        std::size_t index = 0; // count of slots with prefix <= target
        std::size_t mask = highest_pow2_;
        while (mask != 0) {
            const std::size_t next = index + mask;
            if (next <= n_ && tree_[next] <= target) {
                target -= tree_[next];
                index = next;
            }
            mask >>= 1;
        }
        return index;
    }

private:
    std::size_t n_ = 0;
    std::int64_t total_ = 0;
    std::size_t highest_pow2_ = 0;
    std::vector<std::int64_t> tree_;
};

} // namespace critnet
