#ifndef SLAM2D_RNG_HPP
#define SLAM2D_RNG_HPP

#include <cstdint>

namespace slam2d {

/// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std::mt19937 because its
/// output and our Box-Muller transform are pinned here, so seeded runs are
/// byte-identical across standard libraries and platforms.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw in (0, 1].
    double uniform() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via the basic Box-Muller transform (one value per
    /// uniform pair; the sine branch is discarded for simplicity).
    double gaussian();

    /// Derives an independent child stream.
    SplitMix64 split() { return SplitMix64(next()); }

  private:
    std::uint64_t state_;
};

}  // namespace slam2d

#endif
