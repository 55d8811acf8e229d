#pragma once

// Market-share dynamics: how much of the population receives each treatment
// after a study, as a function of the evidence the study produced.

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "voi/model.hpp"

namespace voi {

/// Target share is 0 below `threshold` and rises linearly to 1 at
/// `saturation_at`. The share at exactly `threshold` is 0.
struct ThresholdLinear {
  double threshold = 0.6;
  double saturation_at = 1.0;
  bool operator==(const ThresholdLinear&) const = default;
};

/// Whole population switches to the treatment with the highest expected net
/// benefit. Recovers the unadjusted EVSI.
struct StepAtArgmax {
  bool operator==(const StepAtArgmax&) const = default;
};

/// Piecewise-linear share through (probability, share) breakpoints, constant
/// beyond the first and last breakpoint.
struct BreakpointTable {
  std::vector<std::pair<double, double>> points;
  bool operator==(const BreakpointTable&) const = default;
};

struct MarketShareFunction {
  std::variant<ThresholdLinear, StepAtArgmax, BreakpointTable> kind = ThresholdLinear{};
  std::size_t target = 1;  // treatment whose share is driven; for D = 2 the other gets the rest

  void validate() const;
  bool uses_probability() const { return !std::holds_alternative<StepAtArgmax>(kind); }
  bool operator==(const MarketShareFunction&) const = default;
};

struct CurrentShares {
  std::vector<double> m{1.0, 0.0};

  void validate(std::size_t treatments) const;
  bool operator==(const CurrentShares&) const = default;
};

/// Share of the target treatment for a probability of cost-effectiveness p.
double target_share(const MarketShareFunction& fn, double p);

/// Shares of a two-treatment decision given the target's probability of
/// cost-effectiveness. Throws DomainError for p outside [0,1] or when fn needs
/// expected net benefits (StepAtArgmax).
std::vector<double> market_share(const MarketShareFunction& fn, double p);

/// Shares for one dataset. `mu` are its expected net benefits and
/// `p_target` the target's probability of cost-effectiveness.
void market_share_row(const MarketShareFunction& fn, std::span<const double> mu,
                      double p_target, std::span<double> out);

/// Sum_d m_d * (column mean of nb).
double current_decision_value(const PsaSample& psa, const CurrentShares& shares);

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// (1/S) sum_s sum_d m_d(X_s) mu_{d,s} - sum_d m_d mean_s(mu_{d,s}).
/// The subtracted value of the current decision uses the same mu, so
/// StepAtArgmax with shares on the current optimum gives standard_evsi()
/// exactly. std_error is the delta-method standard error over the S rows.
ValueEstimate assemble_evsi_im(const Eigen::MatrixXd& mu, std::span<const double> p_target,
                               const MarketShareFunction& fn, const CurrentShares& shares);

/// (1/S) sum_s max_d mu_{d,s} - max_d mean_s(mu_{d,s}).
ValueEstimate standard_evsi(const Eigen::MatrixXd& mu);

}  // namespace voi
