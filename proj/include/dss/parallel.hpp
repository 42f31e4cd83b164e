#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dss {

// Worker count: DSS_THREADS when set, hardware concurrency otherwise.
inline int thread_budget(int n_tasks) {
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DSS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) threads = v;
    }
    if (threads < 1) threads = 1;
    return std::min(threads, n_tasks);
}

template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    const int threads = thread_budget(n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace dss
