#include "eigdist/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace eigdist {

std::size_t thread_count() {
    const char* env = std::getenv("EIGDIST_THREADS");
    if (env == nullptr) return 1;
    try {
        const long v = std::stol(env);
        return v < 1 ? 1 : static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        return 1;
    }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex lock;
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(lock);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace eigdist
