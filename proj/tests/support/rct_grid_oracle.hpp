#pragma once

// Brute-force quadrature of the two-arm trial posterior, used as an
// independent reference for the Metropolis sampler.

#include "voi/model.hpp"
#include "voi/studies.hpp"

namespace voi::testing {

struct GridMoments {
  double mean_event_prob = 0.0;    // E[P_C | data]
  double mean_log_odds_ratio = 0.0;
  double var_event_prob = 0.0;
  double var_log_odds_ratio = 0.0;
};

/// Posterior moments on a `points` x `points` grid over (P_C, log OR).
/// P_C spans its prior 0.05%..99.95% quantiles, log OR the prior mean
/// +- 3.29 sd, each widened to cover the likelihood.
GridMoments rct_grid_moments(const EffectivenessData& data, const PriorSpec& prior,
                             int points = 400);

}  // namespace voi::testing
