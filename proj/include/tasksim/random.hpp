#pragma once

// Portable sampling helpers. The standard distribution adaptors are
// implementation-defined, so uniform and categorical draws are done here to
// keep seeded outputs identical across standard libraries.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tasksim {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Stream for (seed, a, b): independent-looking streams for matrix entries
/// sharing a replication seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (a + 1)) ^ (0xbf58476d1ce4e5b9ULL * (b + 1));
    // splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    // rejection keeps the draw unbiased
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

/// Index drawn with probability proportional to weights[i] (via cumulative sums).
class Categorical {
public:
    Categorical() = default;
    explicit Categorical(std::span<const double> weights) {
        cumulative_.reserve(weights.size());
        double s = 0.0;
        for (double w : weights) cumulative_.push_back(s += (w > 0.0 ? w : 0.0));
    }

    [[nodiscard]] std::size_t operator()(Rng& rng) const {
        const double u = uniform01(rng) * cumulative_.back();
        std::size_t lo = 0, hi = cumulative_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cumulative_[mid]) hi = mid;
            else lo = mid + 1;
        }
        return lo;
    }

private:
    std::vector<double> cumulative_;
};

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace tasksim
