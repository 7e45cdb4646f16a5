#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "vdamp/image.hpp"

namespace vdamp {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so independent streams and bit-reproducible replays come
// for free: no generator state is carried between calls.
namespace philox {

inline constexpr uint32_t M0 = 0xD2511F53u;
inline constexpr uint32_t M1 = 0xCD9E8D57u;
inline constexpr uint32_t W0 = 0x9E3779B9u;
inline constexpr uint32_t W1 = 0xBB67AE85u;

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const uint64_t p0 = static_cast<uint64_t>(M0) * ctr[0];
        const uint64_t p1 = static_cast<uint64_t>(M1) * ctr[2];
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

}  // namespace philox

// Seeded stream of independent draws addressed by a 64-bit index.
// `stream` separates draw purposes (mask bits, measurement noise, ...) made
// with the same seed.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    std::array<uint32_t, 4> block(uint64_t index) const {
        return philox::block(
            {static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32),
             static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)},
            {static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32)});
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform(uint64_t index) const {
        const auto w = block(index);
        const uint64_t bits = (static_cast<uint64_t>(w[0]) << 32) | w[1];
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    // CN(0, sigma^2): independent real/imaginary parts, each N(0, sigma^2/2).
    cplx cnormal(uint64_t index, double sigma) const {
        const auto w = block(index);
        const uint64_t b1 = (static_cast<uint64_t>(w[0]) << 32) | w[1];
        const uint64_t b2 = (static_cast<uint64_t>(w[2]) << 32) | w[3];
        // u1 in (0,1] so log is finite
        const double u1 = (static_cast<double>(b1 >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-std::log(u1)) * sigma;  // Box-Muller, complex variance sigma^2
        const double th = 2.0 * M_PI * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }

    // N(0,1) real draw.
    double normal(uint64_t index) const {
        const cplx z = cnormal(index, 1.0);
        return z.real() * std::sqrt(2.0);
    }

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    uint64_t seed_;
    uint64_t stream_;
};

// Stream ids used across the toolkit, kept distinct so one user seed drives
// uncorrelated mask/noise/initialization draws.
namespace streams {
inline constexpr uint64_t mask = 1;
inline constexpr uint64_t noise = 2;
inline constexpr uint64_t power_iteration = 3;
inline constexpr uint64_t test = 1000;
}  // namespace streams

}  // namespace vdamp
