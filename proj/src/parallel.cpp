#include "nssafe/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nssafe {

namespace {
std::atomic<int> g_thread_cap{0};  // 0 = unresolved

int resolve_cap() {
    int cap = g_thread_cap.load();
    if (cap > 0) return cap;
    if (const char* env = std::getenv("NSSAFE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}
}  // namespace

int thread_cap() { return resolve_cap(); }

void set_thread_cap(int n) { g_thread_cap.store(n > 0 ? n : 0); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, bool serial) {
    if (n == 0) return;
    int cap = resolve_cap();
    if (serial || cap <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(cap)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        fn(static_cast<std::size_t>(i));
    }
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace nssafe
