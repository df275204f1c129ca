#include "slam2d/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slam2d {

void WeightParams::validate() const {
    if (!(kappa > 0.0) || !(w_min > 0.0) || !(w_min <= 1.0)) {
        throw std::invalid_argument("WeightParams: kappa > 0 and w_min in (0, 1] required");
    }
}

double weight_from_deviation(double score, const WeightParams& params) {
    params.validate();
    if (!(score >= 0.0)) {
        throw std::invalid_argument("weight_from_deviation: negative score");
    }
    if (score <= params.tau) {
        return 1.0;
    }
    return std::max(params.w_min, std::exp(-params.kappa * (score - params.tau)));
}

}  // namespace slam2d
