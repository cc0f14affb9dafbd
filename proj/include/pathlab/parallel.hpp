#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "pathlab/smallmat.hpp"

namespace pathlab {

/// Per-sample random stream keyed by (seed, index): results never depend on which
/// worker evaluates a sample or in what order.
class SampleStream {
public:
    SampleStream(std::uint64_t seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    Vector uniform_point(int n) {
        Vector x(n);
        for (int i = 0; i < n; ++i) x(i) = uniform();
        return x;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Thread count from an explicit request, else PATHLAB_THREADS, else hardware concurrency.
int resolve_threads(int requested = 0);

/// Calls fn(i) for i in [0, count) on up to `threads` workers with static contiguous
/// chunks. The first exception thrown by any worker is rethrown.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn);

} // namespace pathlab
