#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/partition.hpp"

namespace lfv {

/// Level at time s of the ancestor of the particle at `level` at time T.
/// Events with s <= time <= T are undone in reverse order, so at an event
/// time the answer is the left limit. Undoing J: a participant moves to min J,
/// a level above min J drops by |J n [1, L]| - 1.
inline int ancestral_level(const EventLog& log, int level, double s, double T) {
    if (level < 1) throw ArgumentError("levels start at 1");
    if (!(s <= T)) throw ArgumentError("ancestral_level needs s <= T");
    int L = level;
    for (auto it = log.events.rbegin(); it != log.events.rend(); ++it) {
        if (it->time > T) continue;
        if (it->time < s) break;
        const auto& J = it->levels;
        if (L < J.front()) continue;
        if (std::binary_search(J.begin(), J.end(), L)) {
            L = J.front();
        } else {
            const auto upto = std::upper_bound(J.begin(), J.end(), L) - J.begin();
            L -= static_cast<int>(upto) - 1;
        }
    }
    return L;
}

/// Ancestral levels at time T - lookback of every level 1..n at T, obtained by
/// carrying labels forward through the relabelling used by the simulation.
inline std::vector<int> transported_labels(const EventLog& log, int n, double lookback, double T) {
    const double s = T - lookback;
    std::vector<int> lab(static_cast<std::size_t>(n));
    std::iota(lab.begin(), lab.end(), 1);
    for (const auto& e : log.events) {
        if (e.time < s || e.time > T) continue;
        std::vector<int> J;
        for (int x : e.levels)
            if (x <= n) J.push_back(x);
        if (J.size() < 2) continue;
        const auto src = relabel_sources(n, J, n);
        std::vector<int> next(lab.size());
        for (int k = 1; k <= n; ++k) next[k - 1] = lab[src[k - 1] - 1];
        lab = std::move(next);
    }
    return lab;
}

/// Genealogy of the n levels alive at T, read backward from an event log.
/// Only events with two or more participants among the current ancestral
/// levels [b] matter; each merges the blocks with those indices.
class Genealogy {
public:
    Genealogy(const EventLog& log, int n, double T) : n_(n), T_(T) {
        if (n < 1) throw ArgumentError("genealogy needs n >= 1");
        int b = n;
        for (auto it = log.events.rbegin(); it != log.events.rend(); ++it) {
            if (it->time > T) continue;
            if (b < 2) break;
            std::vector<int> J;
            for (int x : it->levels) {
                if (x > b) break;
                J.push_back(x);
            }
            if (J.size() < 2) continue;
            b -= static_cast<int>(J.size()) - 1;
            lookbacks_.push_back(T - it->time);
            counts_.push_back(b);
            merges_.push_back(std::move(J));
        }
    }

    int n() const { return n_; }
    double T() const { return T_; }
    /// Lookbacks of the merging events, increasing, and block counts after each.
    const std::vector<double>& lookbacks() const { return lookbacks_; }
    const std::vector<int>& counts() const { return counts_; }
    const std::vector<std::vector<int>>& merges() const { return merges_; }

    /// Number of blocks at a lookback, including a merger at exactly that lookback.
    int block_count(double lookback) const {
        const auto i = std::upper_bound(lookbacks_.begin(), lookbacks_.end(), lookback) - lookbacks_.begin();
        return i == 0 ? n_ : counts_[static_cast<std::size_t>(i - 1)];
    }

    /// First lookback at which at most N blocks remain: 0 when n <= N, empty
    /// when the genealogy has not come down to N blocks by time 0.
    std::optional<double> hitting_lookback(int N) const {
        if (n_ <= N) return 0.0;
        for (std::size_t i = 0; i < counts_.size(); ++i)
            if (counts_[i] <= N) return lookbacks_[i];
        return std::nullopt;
    }

    /// Block index (equal to the ancestral level) of every leaf at each of the
    /// given lookbacks, in one pass. out[q][j-1] for leaf j.
    std::vector<std::vector<int>> block_indices(std::vector<double> lookbacks) const {
        std::vector<std::size_t> order(lookbacks.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lookbacks[a] < lookbacks[b]; });
        std::vector<std::vector<int>> out(lookbacks.size());
        std::vector<int> parent(static_cast<std::size_t>(n_) + 1);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        std::vector<int> blocks(static_cast<std::size_t>(n_));  // representative leaf per block, ordered by minimum
        std::iota(blocks.begin(), blocks.end(), 1);
        std::size_t e = 0;
        std::vector<int> pos(static_cast<std::size_t>(n_) + 1, 0);
        for (std::size_t q : order) {
            for (; e < merges_.size() && lookbacks_[e] <= lookbacks[q]; ++e) {
                const auto& J = merges_[e];
                const int keep = find(blocks[J[0] - 1]);
                for (std::size_t i = 1; i < J.size(); ++i) parent[find(blocks[J[i] - 1])] = keep;
                blocks[J[0] - 1] = keep;
                for (std::size_t i = J.size() - 1; i >= 1; --i) blocks.erase(blocks.begin() + (J[i] - 1));
            }
            for (std::size_t i = 0; i < blocks.size(); ++i) pos[find(blocks[i])] = static_cast<int>(i) + 1;
            auto& idx = out[q];
            idx.resize(static_cast<std::size_t>(n_));
            for (int j = 1; j <= n_; ++j) idx[j - 1] = pos[find(j)];
        }
        return out;
    }

    /// Recovered partition Pi(lookback): leaves grouped by ancestral level.
    OrderedPartition partition_at(double lookback) const {
        const auto idx = block_indices({lookback}).front();
        std::vector<std::vector<int>> blocks(static_cast<std::size_t>(block_count(lookback)));
        for (int j = 1; j <= n_; ++j) blocks[idx[j - 1] - 1].push_back(j);
        return OrderedPartition(n_, std::move(blocks));
    }

    /// Block-count profile at the given lookbacks.
    std::vector<int> profile(const std::vector<double>& lookbacks) const {
        std::vector<int> out;
        out.reserve(lookbacks.size());
        for (double t : lookbacks) out.push_back(block_count(t));
        return out;
    }

private:
    int n_;
    double T_;
    std::vector<double> lookbacks_;
    std::vector<int> counts_;
    std::vector<std::vector<int>> merges_;
};

/// The level identity: at every lookback, the block index of each leaf in the
/// recovered partition equals its ancestral level, computed both by undoing
/// events and by carrying labels forward through the relabelling. Throws
/// InvariantViolation naming the first mismatch. Cost O(n x events).
inline void check_level_identity(const EventLog& log, int n, double T, const std::vector<double>& lookbacks) {
    const Genealogy g(log, n, T);
    const auto idx = g.block_indices(lookbacks);
    for (std::size_t q = 0; q < lookbacks.size(); ++q) {
        const double s = T - lookbacks[q];
        const auto fwd = transported_labels(log, n, lookbacks[q], T);
        for (int j = 1; j <= n; ++j) {
            const int back = ancestral_level(log, j, s, T);
            if (back != idx[q][j - 1] || fwd[j - 1] != back)
                throw InvariantViolation("level identity fails for level " + std::to_string(j) + " at lookback " +
                                         std::to_string(lookbacks[q]) + ": block " + std::to_string(idx[q][j - 1]) +
                                         ", undone " + std::to_string(back) + ", carried " + std::to_string(fwd[j - 1]));
        }
    }
}

}  // namespace lfv
