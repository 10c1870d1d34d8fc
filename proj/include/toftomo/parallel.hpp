#pragma once

#include <cstddef>
#include <functional>

namespace toftomo {

// 0 selects std::thread::hardware_concurrency().
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n). Callers write into slot i, so results never depend on scheduling.
// The exception from the lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace toftomo
