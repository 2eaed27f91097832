#pragma once

#include <cstddef>
#include <functional>

namespace lmatch {

// Worker count used by parallel_for. Defaults to 1.
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n) across the configured worker count. Each index
// is executed exactly once; callers write only to per-index outputs, so the
// result is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace lmatch
