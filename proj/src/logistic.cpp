#include "voi/logistic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "voi/error.hpp"

namespace voi {

namespace {

double log_add_exp(double x, double y) {
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

// (A + exp(t))^(-v) evaluated in log space, clamped into (0, 1].
double generalized_logistic(double A, double v, double t) {
  const double h = std::exp(-v * log_add_exp(std::log(A), t));
  return std::clamp(h, std::numeric_limits<double>::min(), 1.0);
}

struct Problem {
  std::vector<double> z;      // standardized mu
  std::vector<double> p;
  std::vector<double> size;   // n / n_ref, empty for the basic model
  double prior_sd = 10.0;

  bool with_size() const { return !size.empty(); }

  // Negative log posterior with the residual variance profiled out.
  double objective(const double* theta) const {
    const double A = 1.0 + std::exp(theta[0]);
    const double B = std::exp(theta[1]);
    const double v = std::exp(theta[2]);
    const double u = with_size() ? theta[3] : 0.0;
    double rss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double slope = with_size() ? B * std::pow(size[i], u) : B;
      const double r = p[i] - generalized_logistic(A, v, -slope * z[i]);
      rss += r * r;
    }
    const double q = static_cast<double>(z.size());
    double penalty = 0.0;
    const std::size_t dim = with_size() ? 4 : 3;
    for (std::size_t k = 0; k < dim; ++k) penalty += theta[k] * theta[k];
    const double value =
        0.5 * q * std::log(std::max(rss / q, 1e-300)) + 0.5 * penalty / (prior_sd * prior_sd);
    return std::isfinite(value) ? value : std::numeric_limits<double>::max();
  }
};

double gsl_objective(const gsl_vector* x, void* params) {
  return static_cast<const Problem*>(params)->objective(x->data);
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

struct RunResult {
  std::vector<double> theta;
  double value;
  bool converged;
};

RunResult nelder_mead(const Problem& problem, std::vector<double> start,
                      const LogisticOptions& options) {
  const std::size_t dim = start.size();
  gsl_multimin_function fn{&gsl_objective, dim, const_cast<Problem*>(&problem)};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(dim));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(dim));

  bool converged = false;
  // A second pass restarted from the first optimum guards against simplex collapse.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < dim; ++k) gsl_vector_set(x.get(), k, start[k]);
    gsl_vector_set_all(step.get(), pass == 0 ? 1.0 : 0.25);
    gsl_multimin_fminimizer_set(minimizer.get(), &fn, x.get(), step.get());
    converged = false;
    // Flat ridges (A -> 1, say) never shrink the simplex; stop once the
    // objective has stalled for a full window instead.
    constexpr int kStallWindow = 200;
    double window_start = problem.objective(start.data());
    for (int it = 1; it <= options.max_iterations; ++it) {
      if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
      const double size = gsl_multimin_fminimizer_size(minimizer.get());
      if (gsl_multimin_test_size(size, options.tolerance) == GSL_SUCCESS) {
        converged = true;
        break;
      }
      if (it % kStallWindow == 0) {
        const double now = gsl_multimin_fminimizer_minimum(minimizer.get());
        if (window_start - now <= options.tolerance * (1.0 + std::abs(now))) {
          converged = true;
          break;
        }
        window_start = now;
      }
    }
    const gsl_vector* best = gsl_multimin_fminimizer_x(minimizer.get());
    for (std::size_t k = 0; k < dim; ++k) start[k] = gsl_vector_get(best, k);
  }
  return {start, gsl_multimin_fminimizer_minimum(minimizer.get()), converged};
}

Standardization standardize(std::span<const double> mu) {
  const double n = static_cast<double>(mu.size());
  double mean = 0.0;
  for (double m : mu) mean += m;
  mean /= n;
  double ss = 0.0;
  for (double m : mu) ss += (m - mean) * (m - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw FitError("expected net benefits are constant; cannot fit a logistic curve");
  return {mean, sd};
}

void check_inputs(std::span<const double> mu, std::span<const double> p, std::size_t minimum) {
  if (mu.size() != p.size()) throw FitError("mu and p differ in length");
  if (mu.size() < minimum) {
    std::ostringstream os;
    os << "logistic fit needs at least " << minimum << " points, got " << mu.size();
    throw FitError(os.str());
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!std::isfinite(mu[i]) || !(p[i] >= 0.0 && p[i] <= 1.0))
      throw FitError("logistic fit needs finite mu and p in [0, 1]");
}

LogisticFit fit(Problem problem, const std::vector<std::vector<double>>& starts,
                const LogisticOptions& options) {
  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  RunResult best{{}, std::numeric_limits<double>::infinity(), false};
  int converged = 0;
  for (const auto& start : starts) {
    RunResult run = nelder_mead(problem, start, options);
    if (!run.converged) continue;
    ++converged;
    if (run.value < best.value) best = std::move(run);
  }
  gsl_set_error_handler(previous);
  if (converged == 0) {
    std::ostringstream os;
    os << "generalized logistic fit did not converge from any of " << starts.size()
       << " starts";
    throw FitError(os.str());
  }

  LogisticFit out;
  out.A = 1.0 + std::exp(best.theta[0]);
  out.B = std::exp(best.theta[1]);
  out.v = std::exp(best.theta[2]);
  if (problem.with_size()) out.u = best.theta[3];
  out.log_posterior = -best.value;
  out.converged_starts = converged;

  double rss = 0.0;
  for (std::size_t i = 0; i < problem.z.size(); ++i) {
    const double slope =
        problem.with_size() ? out.B * std::pow(problem.size[i], *out.u) : out.B;
    const double r = problem.p[i] - generalized_logistic(out.A, out.v, -slope * problem.z[i]);
    rss += r * r;
  }
  out.sigma = std::sqrt(rss / static_cast<double>(problem.z.size()));
  return out;
}

std::vector<std::vector<double>> start_points(int count, bool with_size) {
  static constexpr std::array<std::array<double, 3>, 10> base{{
      {-5.0, 0.0, 0.0},
      {0.0, 0.0, 0.0},
      {-3.0, 1.0, 0.0},
      {-3.0, -1.0, 0.0},
      {-1.0, 0.5, 1.0},
      {-2.0, 0.0, -1.0},
      {-6.0, 1.5, 0.5},
      {1.0, -0.5, 0.5},
      {-4.0, 2.0, -0.5},
      {-0.5, 1.0, 2.0},
  }};
  static constexpr std::array<double, 10> u_start{0.0, 0.5, 0.0, -0.5, 0.5,
                                                  1.0, 0.0, 0.25, -0.25, 0.75};
  const int n = std::clamp(count, 5, static_cast<int>(base.size()));
  std::vector<std::vector<double>> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> s(base[static_cast<std::size_t>(i)].begin(),
                          base[static_cast<std::size_t>(i)].end());
    if (with_size) s.push_back(u_start[static_cast<std::size_t>(i)]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

double LogisticFit::predict(double mu) const {
  return generalized_logistic(A, v, -B * standardization.apply(mu));
}

double LogisticFit::predict(double mu, double n) const {
  if (!u) throw FitError("fit has no sample-size exponent");
  const double slope = B * std::pow(n / size_reference, *u);
  return generalized_logistic(A, v, -slope * standardization.apply(mu));
}

LogisticFit fit_generalized_logistic(std::span<const double> mu, std::span<const double> p,
                                     const LogisticOptions& options) {
  check_inputs(mu, p, 4);
  const Standardization st = standardize(mu);
  Problem problem;
  problem.prior_sd = options.prior_sd;
  problem.p.assign(p.begin(), p.end());
  for (double m : mu) problem.z.push_back(st.apply(m));
  LogisticFit out = fit(std::move(problem), start_points(options.starts, false), options);
  out.standardization = st;
  return out;
}

LogisticFit fit_generalized_logistic_n(std::span<const double> mu, std::span<const double> p,
                                       std::span<const double> sizes,
                                       const LogisticOptions& options) {
  check_inputs(mu, p, 5);
  if (sizes.size() != mu.size()) throw FitError("sizes and mu differ in length");
  double log_sum = 0.0;
  for (double n : sizes) {
    if (!(n > 0.0)) throw FitError("sample sizes must be positive");
    log_sum += std::log(n);
  }
  const double reference = std::exp(log_sum / static_cast<double>(sizes.size()));
  const Standardization st = standardize(mu);
  Problem problem;
  problem.prior_sd = options.prior_sd;
  problem.p.assign(p.begin(), p.end());
  for (double m : mu) problem.z.push_back(st.apply(m));
  for (double n : sizes) problem.size.push_back(n / reference);
  LogisticFit out = fit(std::move(problem), start_points(options.starts, true), options);
  out.standardization = st;
  out.size_reference = reference;
  return out;
}

LogisticFit refit_generalized_logistic(std::span<const double> mu, std::span<const double> p,
                                       std::span<const double> sizes,
                                       const LogisticFit& initial,
                                       const LogisticOptions& options) {
  const bool with_size = initial.u.has_value();
  check_inputs(mu, p, with_size ? 5 : 4);
  if (with_size != !sizes.empty() || (with_size && sizes.size() != mu.size()))
    throw FitError("sizes must be given exactly when the fit has a sample-size exponent");
  Problem problem;
  problem.prior_sd = options.prior_sd;
  problem.p.assign(p.begin(), p.end());
  for (double m : mu) problem.z.push_back(initial.standardization.apply(m));
  for (double n : sizes) problem.size.push_back(n / initial.size_reference);
  std::vector<double> start{std::log(std::max(initial.A - 1.0, 1e-300)), std::log(initial.B),
                            std::log(initial.v)};
  if (with_size) start.push_back(*initial.u);
  LogisticFit out = fit(std::move(problem), {start}, options);
  out.standardization = initial.standardization;
  out.size_reference = initial.size_reference;
  return out;
}

}  // namespace voi
