#pragma once

#include <cstddef>

namespace loadcast::parallel {

// Global worker cap. 0 or 1 selects the serial reference path; anything
// larger enables the OpenMP path when the build has it. The chunk layout
// below never depends on this value, so serial and parallel runs produce
// bit-identical results.
void set_max_threads(int n);
int max_threads();
bool parallel_enabled();

namespace detail {
void run_chunks(std::size_t n_chunks, void* ctx, void (*fn)(void*, std::size_t));
}

// Partitions [0, n) into n_chunks contiguous ranges and runs
// fn(begin, end, chunk_index) for each. Chunk boundaries depend only on
// (n, n_chunks); reduce per-chunk partials in chunk order to keep floating
// point sums identical for any thread count.
template <class F>
void for_chunks(std::size_t n, std::size_t n_chunks, F&& fn) {
    if (n == 0) return;
    if (n_chunks > n) n_chunks = n;
    if (n_chunks == 0) n_chunks = 1;
    struct Ctx {
        F* fn;
        std::size_t n, n_chunks;
    } ctx{&fn, n, n_chunks};
    detail::run_chunks(n_chunks, &ctx, [](void* p, std::size_t c) {
        auto& s = *static_cast<Ctx*>(p);
        const std::size_t base = s.n / s.n_chunks, rem = s.n % s.n_chunks;
        const std::size_t begin = c * base + (c < rem ? c : rem);
        const std::size_t end = begin + base + (c < rem ? 1 : 0);
        (*s.fn)(begin, end, c);
    });
}

// Parallel loop for independent per-index writes (no reduction involved).
template <class F>
void for_each_index(std::size_t n, F&& fn) {
    for_chunks(n, n, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
    });
}

// Default chunk count for reductions; fixed so the summation order is a
// property of the problem size, not of the machine.
inline constexpr std::size_t kReduceChunks = 32;

}  // namespace loadcast::parallel
