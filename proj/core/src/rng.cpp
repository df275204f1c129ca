#include "slam2d/rng.hpp"

#include <cmath>

#include "slam2d/geometry.hpp"

namespace slam2d {

double SplitMix64::gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace slam2d
