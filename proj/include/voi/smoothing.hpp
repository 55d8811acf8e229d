#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace voi {

struct SmoothFit {
  Eigen::VectorXd fitted;
  double lambda = 0.0;
  double edf = 0.0;  // effective degrees of freedom, trace of the hat matrix
  double gcv = 0.0;
  double residual_variance = 0.0;
};

/// Penalized cubic regression spline (P-spline): uniform B-spline basis with
/// a second-order difference penalty, smoothing parameter chosen by
/// generalized cross-validation. One covariate gives a univariate smoother;
/// two give a tensor-product surface with the penalty applied along both
/// margins. The basis is built once and reused for every response.
class PenalizedSpline {
 public:
  PenalizedSpline(const std::vector<std::span<const double>>& covariates, int segments);

  SmoothFit fit(std::span<const double> y) const;

  Eigen::Index basis_size() const { return basis_.cols(); }
  std::string description() const;

 private:
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd gram_;     // B'B
  Eigen::MatrixXd penalty_;  // D'D (tensor sum for two covariates)
  int segments_;
  std::size_t dimensions_;
};

}  // namespace voi
