#pragma once

#include <cstdint>
#include <vector>

namespace hrob {

/// splitmix64 finalizer; the workhorse behind both RNG flavors below.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Sequential deterministic RNG (splitmix64 stream). Stable across platforms,
/// unlike std::uniform_* distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return mix64(state_++); }

    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        // rejection sampling to avoid modulo bias
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1).
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices from [0, n), order randomized.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < k && i < n; ++i) {
            int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k < n ? k : n);
        return idx;
    }

private:
    std::uint64_t state_;
};

/// Counter-based stream: draw i of a keyed sequence is a pure function of
/// (seed, key, i), so any draw is reproducible in isolation and results do
/// not depend on evaluation order or parallel schedule.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t key)
        : base_(mix64(seed ^ mix64(key))) {}

    double uniform(std::uint64_t counter) const {
        return (mix64(base_ ^ mix64(counter)) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t base_;
};

} // namespace hrob
