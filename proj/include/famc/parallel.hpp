#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace famc {

// Deterministic chunked parallel map-reduce. Work is split into fixed-size
// chunks (independent of the worker count), each chunk is computed by some
// worker, and partial results are folded sequentially in chunk order. With
// per-item RNG streams this makes results bit-identical for any thread count.
inline constexpr uint64_t kParallelChunk = 4096;

template <typename Partial, typename ChunkFn, typename FoldFn>
void run_deterministic_chunks(uint64_t total, unsigned threads, ChunkFn&& chunk_fn,
                              FoldFn&& fold_fn) {
    if (total == 0) return;
    const uint64_t nchunks = (total + kParallelChunk - 1) / kParallelChunk;
    unsigned nthreads = threads != 0 ? threads : std::thread::hardware_concurrency();
    if (nthreads == 0) nthreads = 1;
    if (nthreads > nchunks) nthreads = static_cast<unsigned>(nchunks);

    std::vector<Partial> partials(nchunks);
    std::atomic<uint64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= nchunks) return;
            const uint64_t lo = c * kParallelChunk;
            const uint64_t hi = std::min(total, lo + kParallelChunk);
            partials[c] = chunk_fn(lo, hi);
        }
    };

    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (auto& p : partials) fold_fn(std::move(p));
}

}  // namespace famc
