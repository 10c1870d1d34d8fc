#include "toftomo/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace toftomo {

namespace {
std::atomic<int> configured{0};
thread_local bool inside_region = false;

struct RegionGuard {
    bool previous;
    RegionGuard() : previous(inside_region) { inside_region = true; }
    ~RegionGuard() { inside_region = previous; }
};
}

void set_thread_count(int n) { configured.store(std::max(0, n)); }

int thread_count() {
    int n = configured.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    // nested regions run inline on the calling worker
    if (workers <= 1 || inside_region) {
        RegionGuard guard;
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr error;
    auto run = [&] {
        RegionGuard guard;
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace toftomo
