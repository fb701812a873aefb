#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tvc {

// xoshiro256++ generator with splitmix64 seeding. Distribution sampling is
// implemented here rather than with <random> adaptors so that streams are
// bit-reproducible across compilers and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    double heading() { return uniform(0.0, 2.0 * std::numbers::pi); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift method with rejection on the biased range.
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = -n % n;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Index drawn from a discrete distribution given as cumulative weights.
    std::size_t categorical(const double* cumulative, std::size_t n) {
        const double u = uniform() * cumulative[n - 1];
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (u < cumulative[i]) return i;
        return n - 1;
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Stable derivation of substream seeds, so that e.g. adding nodes to a
    // run never perturbs the streams of existing nodes.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t key) {
        std::uint64_t x = seed ^ (0xD1B54A32D192ED03ULL * (key + 1));
        std::uint64_t z = splitmix64(x);
        return z ^ splitmix64(x);
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace tvc
