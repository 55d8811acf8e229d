#include "voi/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <gsl/gsl_bspline.h>
#include <gsl/gsl_vector.h>

#include "voi/error.hpp"

namespace voi {

namespace {

constexpr std::size_t kOrder = 4;  // cubic

struct BsplineDeleter {
  void operator()(gsl_bspline_workspace* w) const { gsl_bspline_free(w); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

// Dense S x K cubic B-spline basis on `segments` equal intervals spanning x.
Eigen::MatrixXd bspline_basis(std::span<const double> x, int segments) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw FitError("covariate is constant; cannot build a spline basis");

  std::unique_ptr<gsl_bspline_workspace, BsplineDeleter> ws(
      gsl_bspline_alloc(kOrder, static_cast<std::size_t>(segments) + 1));
  gsl_bspline_knots_uniform(lo, hi, ws.get());
  const std::size_t K = gsl_bspline_ncoeffs(ws.get());
  std::unique_ptr<gsl_vector, VectorDeleter> nonzero(gsl_vector_alloc(kOrder));

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()),
                                            static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t first = 0, last = 0;
    const double xi = std::clamp(x[i], lo, hi);
    gsl_bspline_eval_nonzero(xi, nonzero.get(), &first, &last, ws.get());
    for (std::size_t j = first; j <= last; ++j)
      B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          gsl_vector_get(nonzero.get(), j - first);
  }
  return B;
}

Eigen::MatrixXd difference_penalty(Eigen::Index K) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 2, K);
  for (Eigen::Index i = 0; i + 2 < K; ++i) {
    D(i, i) = 1.0;
    D(i, i + 1) = -2.0;
    D(i, i + 2) = 1.0;
  }
  return D.transpose() * D;
}

}  // namespace

PenalizedSpline::PenalizedSpline(const std::vector<std::span<const double>>& covariates,
                                 int segments)
    : segments_(segments), dimensions_(covariates.size()) {
  if (covariates.empty() || covariates.size() > 2)
    throw FitError("penalized spline supports one or two covariates");
  if (segments < 2) throw FitError("spline needs at least two segments");
  const std::size_t n = covariates.front().size();
  for (const auto& c : covariates)
    if (c.size() != n) throw FitError("covariates differ in length");

  if (covariates.size() == 1) {
    basis_ = bspline_basis(covariates[0], segments);
    penalty_ = difference_penalty(basis_.cols());
  } else {
    const Eigen::MatrixXd B1 = bspline_basis(covariates[0], segments);
    const Eigen::MatrixXd B2 = bspline_basis(covariates[1], segments);
    const Eigen::Index K1 = B1.cols(), K2 = B2.cols();
    basis_.resize(static_cast<Eigen::Index>(n), K1 * K2);
    // Row-wise Kronecker product; column index j1 * K2 + j2.
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
      for (Eigen::Index j1 = 0; j1 < K1; ++j1)
        for (Eigen::Index j2 = 0; j2 < K2; ++j2) basis_(i, j1 * K2 + j2) = B1(i, j1) * B2(i, j2);
    const Eigen::MatrixXd P1 = difference_penalty(K1);
    const Eigen::MatrixXd P2 = difference_penalty(K2);
    penalty_ = Eigen::MatrixXd::Zero(K1 * K2, K1 * K2);
    for (Eigen::Index a = 0; a < K1; ++a)
      for (Eigen::Index b = 0; b < K1; ++b)
        for (Eigen::Index c = 0; c < K2; ++c) penalty_(a * K2 + c, b * K2 + c) += P1(a, b);
    for (Eigen::Index a = 0; a < K1; ++a)
      for (Eigen::Index c = 0; c < K2; ++c)
        for (Eigen::Index d = 0; d < K2; ++d) penalty_(a * K2 + c, a * K2 + d) += P2(c, d);
  }
  if (basis_.rows() <= basis_.cols())
    throw FitError("not enough observations for the spline basis");
  gram_ = basis_.transpose() * basis_;
}

std::string PenalizedSpline::description() const {
  std::ostringstream os;
  os << (dimensions_ == 1 ? "cubic P-spline" : "tensor cubic P-spline") << ", " << segments_
     << " segments per margin, " << basis_.cols() << " basis functions, GCV smoothing";
  return os.str();
}

SmoothFit PenalizedSpline::fit(std::span<const double> y) const {
  if (static_cast<Eigen::Index>(y.size()) != basis_.rows())
    throw FitError("response length does not match the covariates");
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const double n = static_cast<double>(y.size());

  // Work with the centred response so the quadratic-form RSS below does not
  // cancel catastrophically at net-benefit scale.
  const double y_mean = yv.mean();
  const Eigen::VectorXd yc = yv.array() - y_mean;
  const Eigen::VectorXd bty = basis_.transpose() * yc;
  const double yty = yc.squaredNorm();
  const double scale = gram_.trace() / penalty_.trace();

  SmoothFit best;
  best.gcv = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_coef;
  for (int k = -32; k <= 16; ++k) {
    const double lambda = scale * std::pow(10.0, 0.25 * k);
    const Eigen::MatrixXd A = gram_ + lambda * penalty_;
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd coef = llt.solve(bty);
    const double edf = llt.solve(gram_).trace();
    const double rss = std::max(0.0, yty - 2.0 * coef.dot(bty) + coef.dot(gram_ * coef));
    if (!(n - edf > 0.0)) continue;
    const double gcv = n * rss / ((n - edf) * (n - edf));
    if (gcv < best.gcv) {
      best.gcv = gcv;
      best.lambda = lambda;
      best.edf = edf;
      best_coef = coef;
    }
  }
  if (best_coef.size() == 0) throw FitError("penalized spline system is singular for every lambda");

  best.fitted = (basis_ * best_coef).array() + y_mean;
  const double rss = (yv - best.fitted).squaredNorm();
  best.residual_variance = rss / std::max(1.0, n - best.edf);
  return best;
}

}  // namespace voi
