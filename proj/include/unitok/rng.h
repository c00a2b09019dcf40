#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace unitok {

// Counter-based RNG. Every random draw in the project is a pure function of
// (seed, stream name, counter), so runs are reproducible and resuming a
// training run does not require serializing generator state: consumers
// re-derive their stream from the config seed and their step counter.
namespace rngdetail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace rngdetail

class Rng {
  public:
    Rng(uint64_t seed, std::string_view stream)
        : key_(rngdetail::splitmix64(seed ^ rngdetail::fnv1a64(stream))), ctr_(0) {}

    // Derive a substream, e.g. one per training step.
    Rng fork(uint64_t salt) const {
        Rng r = *this;
        r.key_ = rngdetail::splitmix64(key_ ^ rngdetail::splitmix64(salt ^ 0xa5a5a5a5a5a5a5a5ULL));
        r.ctr_ = 0;
        return r;
    }

    uint64_t next_u64() { return rngdetail::splitmix64(key_ + 0x632be59bd9b4e019ULL * ++ctr_); }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    // Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    uint64_t key_;
    uint64_t ctr_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace unitok
