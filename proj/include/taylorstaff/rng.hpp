#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace taylorstaff {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent substream seed for (base, stream, index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(splitmix64(base) ^ (stream * 0xD1B54A32D192ED03ULL)) ^ index);
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x5EEDu, 0x7A11u};
    return Engine(seq);
}

namespace stream {
inline constexpr std::uint64_t arrivals = 1;
inline constexpr std::uint64_t service = 2;
inline constexpr std::uint64_t restarts = 3;
inline constexpr std::uint64_t datasets = 4;
}  // namespace stream

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n). Work is split in contiguous blocks; fn must only
// touch state owned by index i, so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
    unsigned t = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            std::size_t lo = n * w / t, hi = n * (w + 1) / t;
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace taylorstaff
