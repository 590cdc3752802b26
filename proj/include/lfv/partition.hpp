#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "lfv/error.hpp"

namespace lfv {

/// Partition of {1..n} into blocks ordered by their least elements. Block
/// indices are 1-based in the public interface, matching levels.
class OrderedPartition {
public:
    OrderedPartition() = default;

    /// Validates and normalizes: sorts every block and orders blocks by minimum.
    OrderedPartition(int n, std::vector<std::vector<int>> blocks) : n_(n), blocks_(std::move(blocks)) {
        if (n < 0) throw ArgumentError("partition size must be nonnegative");
        std::vector<int> seen(static_cast<std::size_t>(n) + 1, 0);
        for (auto& b : blocks_) {
            if (b.empty()) throw ArgumentError("partition blocks must be nonempty");
            std::sort(b.begin(), b.end());
            for (int x : b) {
                if (x < 1 || x > n) throw ArgumentError("partition element out of range");
                if (seen[x]++) throw ArgumentError("partition blocks overlap");
            }
        }
        for (int x = 1; x <= n; ++x)
            if (!seen[x]) throw ArgumentError("partition does not cover element " + std::to_string(x));
        std::sort(blocks_.begin(), blocks_.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
        rebuild_index();
    }

    /// The partition into singletons, 0_[n].
    static OrderedPartition finest(int n) {
        OrderedPartition p;
        p.n_ = n;
        p.blocks_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p.blocks_[i] = {i + 1};
        p.rebuild_index();
        return p;
    }

    int n() const { return n_; }
    int size() const { return static_cast<int>(blocks_.size()); }
    const std::vector<std::vector<int>>& blocks() const { return blocks_; }
    const std::vector<int>& block(int index) const { return blocks_.at(static_cast<std::size_t>(index - 1)); }
    /// 1-based index of the block holding element x.
    int block_of(int x) const { return block_of_.at(static_cast<std::size_t>(x)); }

    /// Merges the blocks with the given sorted 1-based indices. The merged block
    /// keeps the position of the lowest one, so the order by minima persists.
    OrderedPartition merge(const std::vector<int>& indices) const {
        if (indices.size() < 2) throw ArgumentError("merge needs at least two blocks");
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] < 1 || indices[i] > size()) throw ArgumentError("merge index out of range");
            if (i && indices[i] <= indices[i - 1]) throw ArgumentError("merge indices must increase strictly");
        }
        OrderedPartition out;
        out.n_ = n_;
        out.blocks_.reserve(blocks_.size() - indices.size() + 1);
        std::size_t next = 0;
        for (int i = 1; i <= size(); ++i) {
            if (next < indices.size() && indices[next] == i) {
                if (next == 0) {
                    std::vector<int> merged;
                    for (int j : indices) merged.insert(merged.end(), block(j).begin(), block(j).end());
                    std::sort(merged.begin(), merged.end());
                    out.blocks_.push_back(std::move(merged));
                }
                ++next;
            } else {
                out.blocks_.push_back(block(i));
            }
        }
        out.rebuild_index();
        return out;
    }

    /// Restriction to {1..m}: intersect, drop empty blocks, keep the order by minima.
    OrderedPartition restrict_to(int m) const {
        if (m < 0 || m > n_) throw ArgumentError("restriction size out of range");
        OrderedPartition out;
        out.n_ = m;
        for (const auto& b : blocks_) {
            std::vector<int> r;
            for (int x : b)
                if (x <= m) r.push_back(x);
            if (!r.empty()) out.blocks_.push_back(std::move(r));
        }
        out.rebuild_index();
        return out;
    }

    /// Number of blocks of the restriction to {1..m}, without building it.
    int restricted_size(int m) const {
        int c = 0;
        for (const auto& b : blocks_)
            if (b.front() <= m) ++c;
        return c;
    }

    /// Checks the structural invariants; throws InvariantViolation.
    void check() const {
        std::vector<int> seen(static_cast<std::size_t>(n_) + 1, 0);
        int prev_min = 0;
        for (const auto& b : blocks_) {
            if (b.empty()) throw InvariantViolation("empty block");
            if (b.front() <= prev_min) throw InvariantViolation("blocks not ordered by least elements");
            prev_min = b.front();
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (i && b[i] <= b[i - 1]) throw InvariantViolation("block not sorted");
                if (b[i] < 1 || b[i] > n_ || seen[b[i]]++) throw InvariantViolation("blocks do not partition [n]");
            }
        }
        for (int x = 1; x <= n_; ++x)
            if (!seen[x]) throw InvariantViolation("element missing from partition");
    }

    friend bool operator==(const OrderedPartition& a, const OrderedPartition& b) {
        return a.n_ == b.n_ && a.blocks_ == b.blocks_;
    }

    std::string to_string() const {
        std::string s = "{";
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            s += i ? ",{" : "{";
            for (std::size_t j = 0; j < blocks_[i].size(); ++j) s += (j ? "," : "") + std::to_string(blocks_[i][j]);
            s += "}";
        }
        return s + "}";
    }

private:
    void rebuild_index() {
        block_of_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            for (int x : blocks_[i]) block_of_[x] = static_cast<int>(i) + 1;
    }

    int n_ = 0;
    std::vector<std::vector<int>> blocks_;
    std::vector<int> block_of_;
};

inline OrderedPartition restriction(const OrderedPartition& p, int m) { return p.restrict_to(m); }

}  // namespace lfv
