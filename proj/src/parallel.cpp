#include "kspl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace kspl {

namespace {
int g_max_threads = []() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}();
} // namespace

void set_max_threads(int n) { g_max_threads = std::max(1, n); }

int max_threads() { return g_max_threads; }

void parallel_for_chunks(std::size_t n, std::size_t n_chunks,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    n_chunks = std::min(n_chunks, n);
    auto chunk_bounds = [n, n_chunks](std::size_t c) {
        return std::pair{c * n / n_chunks, (c + 1) * n / n_chunks};
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(g_max_threads), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            auto [b, e] = chunk_bounds(c);
            fn(c, b, e);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) break;
            try {
                auto [b, e] = chunk_bounds(c);
                fn(c, b, e);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace kspl
