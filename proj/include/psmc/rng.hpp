#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

// Deterministic, platform-stable random streams.
//
// The generator is xoshiro256** seeded through the splitmix64 finalizer.
// Every draw is a pure function of (seed, draw index); the exact bit-level
// definition is documented in docs/rng.md so independent implementations
// can reproduce the sequences.

namespace psmc {

// splitmix64 avalanche finalizer (bit-exact, see docs/rng.md).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream seed for a numbered executor. Injective in worker_id for any
// master seed (verified exhaustively for ids below 2^16 in the tests).
constexpr std::uint64_t seed_for_worker(std::uint64_t master_seed, std::uint32_t worker_id) {
    constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ULL;  // odd
    return mix64(master_seed ^ ((static_cast<std::uint64_t>(worker_id) + 1) * kPhi));
}

class RngStream {
  public:
    static constexpr const char* kAlgorithm = "xoshiro256ss-v1";

    explicit RngStream(std::uint64_t seed) : seed_(seed) {
        // Expand the 64-bit seed into the 256-bit state with splitmix64.
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        ++draws_;
        return result;
    }

    // Uniform double in [0, 1), 53 significant bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double on [0, hi]; degenerate hi == 0 yields 0 without a draw.
    double uniform(double hi) {
        if (hi <= 0.0) return 0.0;
        return next_unit() * hi;
    }

    // Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-next_unit()) / rate; }

    // Index in [0, n) weighted by w[i]; consumes one draw when n > 1.
    template <typename Weights>
    std::size_t weighted_pick(const Weights& w) {
        if (w.size() == 1) return 0;
        long long total = 0;
        for (auto x : w) total += static_cast<long long>(x);
        const double u = next_unit() * static_cast<double>(total);
        long long acc = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            acc += static_cast<long long>(w[i]);
            if (u < static_cast<double>(acc)) return i;
        }
        return w.size() - 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draws() const { return draws_; }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
    std::uint64_t seed_ = 0;
    std::uint64_t draws_ = 0;
};

}  // namespace psmc
