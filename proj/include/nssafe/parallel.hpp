#pragma once

#include <cstddef>
#include <functional>

namespace nssafe {

// Number of worker threads the parallel kernels may use. Resolution order:
// explicit set_thread_cap() > NSSAFE_THREADS env var > OpenMP default.
// Returns 1 when built without OpenMP.
int thread_cap();
void set_thread_cap(int n);

// Runs fn(i) for i in [0, n). Iterations must be independent; any reduction
// is done by the caller over an index-addressed results array so the outcome
// never depends on the schedule or the thread count. serial=true forces the
// plain loop (the reference path the tests compare against).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  bool serial = false);

}  // namespace nssafe
