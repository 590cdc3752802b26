#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "lfv/error.hpp"

namespace lfv {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of one replica's generator: splitmix64 chained over (master, replica,
/// stream). Independent of the worker count by construction.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica, std::uint64_t stream = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ replica) ^ (stream * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t replica, std::uint64_t stream = 0) {
    return Rng(derive_seed(master, replica, stream));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on (0, 1].
inline double uniform_open0(Rng& rng) { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; }

inline double exponential(Rng& rng, double rate) { return -std::log(uniform_open0(rng)) / rate; }

inline double normal(Rng& rng) {
    // Marsaglia polar method; the spare draw is discarded so the stream
    // position depends only on the number of calls.
    for (;;) {
        double u = 2.0 * uniform01(rng) - 1.0;
        double v = 2.0 * uniform01(rng) - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    // Lemire's nearly divisionless method.
    unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t t = (0 - n) % n;
        while (low < t) {
            m = static_cast<unsigned __int128>(rng()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// Walker/Vose alias table over indices 0..size-1.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(std::span<const double> weights) {
        const std::size_t n = weights.size();
        if (n == 0) throw ArgumentError("alias table needs at least one weight");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("alias weights must be finite and nonnegative");
            total += w;
        }
        if (!(total > 0.0)) throw ArgumentError("alias weights sum to zero");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            auto s = small.back();
            small.pop_back();
            auto l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large) prob_[i] = 1.0;
        for (auto i : small) prob_[i] = 1.0;  // leftovers from rounding
    }

    std::size_t size() const { return prob_.size(); }

    std::size_t sample(Rng& rng) const {
        const std::size_t i = uniform_index(rng, prob_.size());
        return uniform01(rng) < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

/// Uniform k-subset of {1..n}, sorted ascending. Floyd's algorithm for small
/// k, a partial Fisher-Yates shuffle otherwise.
inline std::vector<int> sample_subset(int n, int k, Rng& rng) {
    if (k < 0 || k > n) throw ArgumentError("sample_subset requires 0 <= k <= n");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    if (k == n) {
        for (int i = 1; i <= n; ++i) out.push_back(i);
        return out;
    }
    if (static_cast<long long>(k) * 8 <= n) {
        if (k <= 32) {
            for (int j = n - k + 1; j <= n; ++j) {
                int t = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(j)));
                if (std::find(out.begin(), out.end(), t) != out.end()) t = j;
                out.push_back(t);
            }
        } else {
            std::unordered_set<int> seen;
            seen.reserve(static_cast<std::size_t>(2 * k));
            for (int j = n - k + 1; j <= n; ++j) {
                int t = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(j)));
                if (!seen.insert(t).second) {
                    t = j;
                    seen.insert(t);
                }
                out.push_back(t);
            }
        }
    } else {
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[i] = i + 1;
        for (int i = 0; i < k; ++i) {
            auto j = i + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n - i)));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lfv
