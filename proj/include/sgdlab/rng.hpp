#pragma once

// Counter-based RNG (Philox4x32-10).  Each logical stream is addressed by
// (seed, stream index); draws within a stream consume a 64-bit block counter.
// Streams are statistically independent and reproducible regardless of how
// work is scheduled across threads.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sgdlab {

struct PhiloxBlock {
    std::uint32_t v[4];
};

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

inline PhiloxBlock philox4x32(PhiloxBlock ctr, std::uint32_t k0, std::uint32_t k1) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo(detail::kPhiloxM0, ctr.v[0], hi0, lo0);
        detail::mulhilo(detail::kPhiloxM1, ctr.v[2], hi1, lo1);
        PhiloxBlock next;
        next.v[0] = hi1 ^ ctr.v[1] ^ k0;
        next.v[1] = lo1;
        next.v[2] = hi0 ^ ctr.v[3] ^ k1;
        next.v[3] = lo0;
        ctr = next;
        k0 += detail::kWeyl0;
        k1 += detail::kWeyl1;
    }
    return ctr;
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          index_(index) {}

    // uniform on (0,1), never 0 or 1
    double uniform() {
        std::uint64_t bits = (static_cast<std::uint64_t>(next_lane()) << 32) | next_lane();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller, pairs cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    // ±1 with equal probability
    double rademacher() { return (next_lane() & 1u) ? 1.0 : -1.0; }

    std::uint64_t counter() const { return block_; }

private:
    std::uint32_t next_lane() {
        if (lane_ == 4) {
            PhiloxBlock ctr;
            ctr.v[0] = static_cast<std::uint32_t>(block_);
            ctr.v[1] = static_cast<std::uint32_t>(block_ >> 32);
            ctr.v[2] = static_cast<std::uint32_t>(index_);
            ctr.v[3] = static_cast<std::uint32_t>(index_ >> 32);
            buf_ = philox4x32(ctr, key0_, key1_);
            ++block_;
            lane_ = 0;
        }
        return buf_.v[lane_++];
    }

    std::uint32_t key0_, key1_;
    std::uint64_t index_;
    std::uint64_t block_ = 0;
    PhiloxBlock buf_{};
    int lane_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sgdlab
