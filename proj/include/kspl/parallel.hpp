#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace kspl {

// Caps the number of worker threads. Never affects results: work is always
// split into the same fixed chunks and chunk results are combined in a
// fixed order, so any thread count produces bit-identical output.
void set_max_threads(int n);
int max_threads();

// Runs fn(chunk_index, begin, end) for [0, n) split into n_chunks contiguous
// chunks. Chunk boundaries depend only on (n, n_chunks). fn must only write
// to chunk-private storage.
void parallel_for_chunks(std::size_t n, std::size_t n_chunks,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Fixed-order pairwise tree reduction over per-chunk partials.
template <typename T, typename Merge>
T merge_pairwise(std::vector<T>& parts, Merge merge) {
    if (parts.empty()) return T{};
    for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
        for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
            merge(parts[i], parts[i + stride]);
        }
    }
    return std::move(parts[0]);
}

// Default chunk counts for batch-gradient and Monte Carlo loops.
inline constexpr std::size_t kGradChunks = 16;
inline constexpr std::size_t kMcChunks = 64;

} // namespace kspl
