#include "loadcast/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace loadcast::parallel {

namespace {
int g_max_threads = -1;  // -1: not set, use the OpenMP default
}

void set_max_threads(int n) { g_max_threads = n; }

int max_threads() {
#ifdef _OPENMP
    if (g_max_threads < 0) return omp_get_max_threads();
    return g_max_threads < 1 ? 1 : g_max_threads;
#else
    return 1;
#endif
}

bool parallel_enabled() {
#ifdef _OPENMP
    return max_threads() > 1;
#else
    return false;
#endif
}

namespace detail {

void run_chunks(std::size_t n_chunks, void* ctx, void (*fn)(void*, std::size_t)) {
#ifdef _OPENMP
    if (parallel_enabled() && n_chunks > 1) {
        const int nt = max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
        for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
            fn(ctx, static_cast<std::size_t>(c));
        }
        return;
    }
#endif
    for (std::size_t c = 0; c < n_chunks; ++c) fn(ctx, c);
}

}  // namespace detail

}  // namespace loadcast::parallel
