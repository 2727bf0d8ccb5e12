#pragma once

#include <cstddef>
#include <functional>

namespace segstab {

/// Worker cap from SEGSTAB_THREADS (0 or unset = hardware concurrency).
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
/// visited exactly once; callers write results into per-index slots so the
/// reduction order stays fixed.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace segstab
