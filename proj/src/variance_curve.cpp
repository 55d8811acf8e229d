#include "voi/variance_curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>

#include "voi/error.hpp"

namespace voi {

double VarianceCurveFit::posterior_variance(double n) const {
  return a + (prior_variance - a) * c / (n + c);
}

double VarianceCurveFit::reduction(double n) const {
  return std::clamp(prior_variance - posterior_variance(n), 0.0, prior_variance);
}

namespace {

struct CurveProblem {
  std::span<const double> w;
  std::span<const double> n;
  double prior_variance;

  // For fixed c the model is linear in a; returns the optimal a.
  double best_a(double c) const {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double x = n[i] / (n[i] + c);
      const double y = w[i] - prior_variance * c / (n[i] + c);
      sxy += x * y;
      sxx += x * x;
    }
    if (!(sxx > 0.0)) return prior_variance;
    return std::clamp(sxy / sxx, 0.0, prior_variance);
  }

  double rss(double log_c) const {
    const double c = std::exp(log_c);
    const double a = best_a(c);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double r = w[i] - (a + (prior_variance - a) * c / (n[i] + c));
      total += r * r;
    }
    return total;
  }
};

double gsl_rss(double log_c, void* params) {
  return static_cast<const CurveProblem*>(params)->rss(log_c);
}

struct MinimizerDeleter {
  void operator()(gsl_min_fminimizer* m) const { gsl_min_fminimizer_free(m); }
};

}  // namespace

VarianceCurveFit fit_variance_curve(std::span<const double> posterior_variances,
                                    std::span<const double> sizes, double prior_variance) {
  if (posterior_variances.size() != sizes.size())
    throw FitError("variances and sizes differ in length");
  if (sizes.size() < 4) throw FitError("variance curve needs at least 4 points");
  if (!(prior_variance > 0.0)) throw FitError("prior variance must be positive");
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (!(sizes[i] > 0.0) || !std::isfinite(posterior_variances[i]))
      throw FitError("variance curve needs positive sizes and finite variances");

  const CurveProblem problem{posterior_variances, sizes, prior_variance};
  const auto [min_n, max_n] = std::minmax_element(sizes.begin(), sizes.end());
  const double lo = std::log(*min_n) - 8.0;
  const double hi = std::log(*max_n) + 8.0;
  constexpr int kGrid = 241;
  std::vector<double> grid(kGrid), value(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = lo + (hi - lo) * i / (kGrid - 1);
    value[i] = problem.rss(grid[i]);
    if (value[i] < value[best]) best = i;
  }
  if (!std::isfinite(value[best])) throw FitError("variance curve objective is not finite");

  double log_c = grid[best];
  if (best > 0 && best < kGrid - 1 && value[best] < value[best - 1] &&
      value[best] < value[best + 1]) {
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    std::unique_ptr<gsl_min_fminimizer, MinimizerDeleter> minimizer(
        gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent));
    gsl_function fn{&gsl_rss, const_cast<CurveProblem*>(&problem)};
    if (gsl_min_fminimizer_set(minimizer.get(), &fn, grid[best], grid[best - 1],
                               grid[best + 1]) == GSL_SUCCESS) {
      for (int it = 0; it < 200; ++it) {
        if (gsl_min_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
        const double a = gsl_min_fminimizer_x_lower(minimizer.get());
        const double b = gsl_min_fminimizer_x_upper(minimizer.get());
        if (gsl_min_test_interval(a, b, 1e-10, 0.0) == GSL_SUCCESS) break;
      }
      log_c = gsl_min_fminimizer_x_minimum(minimizer.get());
    }
    gsl_set_error_handler(previous);
  }

  VarianceCurveFit out;
  out.prior_variance = prior_variance;
  out.c = std::exp(log_c);
  out.a = problem.best_a(out.c);
  return out;
}

}  // namespace voi
