#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "lfv/error.hpp"

namespace lfv {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Runs f(0), ..., f(count-1) on a shared work queue and returns the results
/// in replica order. Each call must own its state (seed it from the replica
/// index), so the output does not depend on the worker count. The exception
/// of the lowest failing replica is rethrown after all workers stop.
template <class F>
auto map_replicas(int count, int workers, F&& f) -> std::vector<std::invoke_result_t<F&, int>> {
    using R = std::invoke_result_t<F&, int>;
    if (count < 0) throw ArgumentError("replica count must be nonnegative");
    std::vector<std::optional<R>> slots(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    std::atomic<bool> stop{false};
    std::mutex fail_mutex;
    int fail_index = count;
    std::exception_ptr fail;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count || stop.load()) return;
            try {
                slots[static_cast<std::size_t>(i)].emplace(f(i));
            } catch (...) {
                std::lock_guard lock(fail_mutex);
                if (i < fail_index) {
                    fail_index = i;
                    fail = std::current_exception();
                }
                stop.store(true);
            }
        }
    };
    const int w = std::clamp(resolve_workers(workers), 1, std::max(1, count));
    if (w == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < w; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fail) std::rethrow_exception(fail);
    std::vector<R> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace lfv
