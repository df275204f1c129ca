#ifndef SLAM2D_WEIGHTING_HPP
#define SLAM2D_WEIGHTING_HPP

namespace slam2d {

/// Parameters of the deviation-to-weight map used by adaptive factors.
struct WeightParams {
    double tau = 0.0;    // deviation below which the weight stays 1
    double kappa = 1.0;  // decay rate past tau, 1/score-units
    double w_min = 0.05;

    void validate() const;
};

/// 1 for score <= tau, exponential decay bounded below by w_min beyond.
/// Continuous at score == tau. Throws on negative score.
double weight_from_deviation(double score, const WeightParams& params);

}  // namespace slam2d

#endif
