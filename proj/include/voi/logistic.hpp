#pragma once

// Generalized logistic map from expected (incremental) net benefit to the
// probability of cost-effectiveness:
//
//   h(mu)    = (A + exp(-B z))^(-v),            z = (mu - center) / scale
//   h(mu, n) = (A + exp(-B (n / n_ref)^u z))^(-v)
//
// fitted by maximum a posteriori estimation on the unconstrained
// coordinates a, b, w (and u) with A = 1 + exp(a), B = exp(b), v = exp(w).

#include <optional>
#include <span>

namespace voi {

struct Standardization {
  double center = 0.0;
  double scale = 1.0;

  double apply(double x) const { return (x - center) / scale; }
  bool operator==(const Standardization&) const = default;
};

struct LogisticOptions {
  int starts = 8;          // multi-start count, at least 5
  int max_iterations = 4000;
  double prior_sd = 10.0;  // Normal(0, prior_sd^2) on each unconstrained coordinate
  double tolerance = 1e-9;
};

struct LogisticFit {
  double A = 1.0;
  double B = 1.0;
  double v = 1.0;
  std::optional<double> u;  // sample-size exponent; present only for the by-n variant
  double sigma = 0.0;       // residual standard deviation
  Standardization standardization;
  double size_reference = 1.0;  // n_ref for the by-n variant
  double log_posterior = 0.0;
  int converged_starts = 0;

  /// Probability at expected net benefit `mu`, in (0, 1].
  double predict(double mu) const;
  /// Probability at `mu` for sample size `n` (requires u).
  double predict(double mu, double n) const;
};

/// Requires at least 4 points; throws FitError if no start converges.
LogisticFit fit_generalized_logistic(std::span<const double> mu, std::span<const double> p,
                                     const LogisticOptions& options = {});

/// Requires at least 5 points and positive sample sizes.
LogisticFit fit_generalized_logistic_n(std::span<const double> mu, std::span<const double> p,
                                       std::span<const double> sizes,
                                       const LogisticOptions& options = {});

/// Refit to new (mu, p) pairs by a single search started at `initial`,
/// keeping its standardization and size reference. Pass sizes only when
/// `initial` has a sample-size exponent. Used for bootstrap replicates.
LogisticFit refit_generalized_logistic(std::span<const double> mu, std::span<const double> p,
                                       std::span<const double> sizes,
                                       const LogisticFit& initial,
                                       const LogisticOptions& options = {});

}  // namespace voi
