#pragma once

#include <span>

namespace voi {

/// Posterior net-benefit variance as a function of study size:
///   w(n) = a + (prior_variance - a) * c / (n + c)
/// so w(0) equals the prior variance and w(n) -> a as n grows.
struct VarianceCurveFit {
  double a = 0.0;
  double c = 1.0;
  double prior_variance = 0.0;

  double posterior_variance(double n) const;
  /// prior_variance - w(n), kept inside [0, prior_variance].
  double reduction(double n) const;
};

/// Least-squares fit of (a, c) to Q >= 4 (variance, size) pairs. The fitted
/// a is constrained to [0, prior_variance]. Throws FitError on failure.
VarianceCurveFit fit_variance_curve(std::span<const double> posterior_variances,
                                    std::span<const double> sizes, double prior_variance);

}  // namespace voi
