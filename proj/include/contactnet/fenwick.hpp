#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace contactnet {

/// Fenwick tree over non-negative integer weights, indexed from 0.
/// Supports point updates, total, and inverse-prefix lookup in O(log n).
class FenwickTree {
public:
    explicit FenwickTree(int n) : n_(n), tree_(static_cast<std::size_t>(n) + 1, 0) {
        log_ = 0;
        while ((1 << (log_ + 1)) <= n_) ++log_;
    }

    void add(int i, std::int64_t delta) {
        total_ += delta;
        for (int pos = i + 1; pos <= n_; pos += pos & -pos)
            tree_[static_cast<std::size_t>(pos)] += delta;
    }

    std::int64_t total() const { return total_; }

    std::int64_t prefix(int count) const {  // sum of the first `count` weights
        std::int64_t s = 0;
        for (int pos = count; pos > 0; pos -= pos & -pos) s += tree_[static_cast<std::size_t>(pos)];
        return s;
    }

    /// Smallest index i with prefix(i+1) > r. Requires 0 <= r < total().
    int find(std::int64_t r) const {
        if (r < 0 || r >= total_) throw std::range_error("FenwickTree::find: r out of range");
        int pos = 0;
        for (int bit = 1 << log_; bit > 0; bit >>= 1) {
            const int next = pos + bit;
            if (next <= n_ && tree_[static_cast<std::size_t>(next)] <= r) {
                r -= tree_[static_cast<std::size_t>(next)];
                pos = next;
            }
        }
        return pos;  // 0-based: pos entries have cumulative weight <= original r
    }

private:
    int n_;
    int log_ = 0;
    std::vector<std::int64_t> tree_;
    std::int64_t total_ = 0;
};

}  // namespace contactnet
