#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random streams: each path owns an independent generator
// derived from (seed, path index), so serial and parallel runs agree
// bit-exactly and a path's stream does not depend on other paths' draw
// counts.

namespace walsh {

namespace detail {

// SplitMix64 finalizer; used both as a mixer and to expand seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ engine.
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    Xoshiro256pp() : Xoshiro256pp(0, 0) {}

    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = detail::mix64(seed) ^ detail::rotl(detail::mix64(stream ^ 0x5851f42d4c957f2dULL), 32);
        for (auto& w : state_) {
            z = detail::mix64(z);
            w = z;
        }
        // State of all zeros is invalid; mix64 of anything is nonzero in practice,
        // but guard regardless.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t operator()() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ULL; }

  private:
    std::array<std::uint64_t, 4> state_;
};

// Per-path stream with the draw primitives the simulator needs.
class PathRng {
  public:
    PathRng(std::uint64_t seed, std::uint64_t path_index) : eng_(seed, path_index) {}

    // Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, second value cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rho = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        cached_ = rho * std::sin(ang);
        have_cached_ = true;
        return rho * std::cos(ang);
    }

    std::uint64_t next_u64() { return eng_(); }

  private:
    Xoshiro256pp eng_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Maximum of a Brownian bridge on a step of length dt with endpoints w0, w1,
// sampled by inverting P[max >= y] = exp(-2(y-w0)(y-w1)/dt), y >= max(w0,w1).
inline double bridge_max(double w0, double w1, double dt, double u) {
    const double d = w1 - w0;
    return 0.5 * (w0 + w1 + std::sqrt(d * d - 2.0 * dt * std::log(u)));
}

// Minimum of the same bridge, by symmetry.
inline double bridge_min(double w0, double w1, double dt, double u) {
    const double d = w1 - w0;
    return 0.5 * (w0 + w1 - std::sqrt(d * d - 2.0 * dt * std::log(u)));
}

}  // namespace walsh
