// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <random>

namespace hammix {

namespace detail {
// SplitMix64 finalizer (Stafford mix13): full-avalanche 64-bit mixer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}  // namespace detail

// Keyed counter stream: a SplitMix64 sequence whose starting point is a
// hash of (seed, keys...). Streams derived with distinct keys are mutually
// independent for practical purposes, which is what the sampler relies on
// when it hands one stream per datum / per cluster / per chain.
//
// Satisfies UniformRandomBitGenerator, so <random> distributions apply.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) : state_(detail::mix64(seed + detail::kGolden)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    // Child stream keyed on up to three integers; does not advance *this.
    RngStream derive(std::uint64_t k1, std::uint64_t k2 = 0, std::uint64_t k3 = 0) const {
        RngStream child(0);
        std::uint64_t s = state_;
        s = detail::mix64(s ^ detail::mix64(k1 + detail::kGolden));
        s = detail::mix64(s ^ detail::mix64(k2 + 2 * detail::kGolden));
        s = detail::mix64(s ^ detail::mix64(k3 + 3 * detail::kGolden));
        child.state_ = s;
        return child;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer in {0, ..., n-1}.
    std::uint64_t uniform_below(std::uint64_t n) {
        // Lemire-style rejection-free enough for n << 2^64; small bias is
        // irrelevant at the n used here, but reject to keep it exact.
        std::uint64_t x, r;
        do {
            x = (*this)();
            r = x % n;
        } while (x - r > ~std::uint64_t(0) - n + 1);
        return r;
    }

private:
    std::uint64_t state_;
};

// Shape/rate parameterization (mean shape/rate).
inline double rand_gamma(double shape, double rate, RngStream& rng) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(rng);
}

inline int rand_poisson(double lambda, RngStream& rng) {
    std::poisson_distribution<int> d(lambda);
    return d(rng);
}

inline double rand_normal(double mean, double sd, RngStream& rng) {
    std::normal_distribution<double> d(mean, sd);
    return d(rng);
}

}  // namespace hammix
