#pragma once

// Nested Monte Carlo estimation of EVSI and implementation-adjusted EVSI.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "voi/implementation.hpp"
#include "voi/model.hpp"
#include "voi/studies.hpp"

namespace voi {

/// Posterior expected net benefit, probability of cost-effectiveness and
/// posterior net-benefit variance of every treatment for one dataset.
struct PosteriorSummary {
  std::vector<double> mu;
  std::vector<double> p;
  std::vector<double> variance;
  int n_effective = 0;
  std::size_t dataset_index = 0;
};

struct EvsiEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t S = 0;
  std::size_t R = 0;
  double wall_time = 0.0;  // seconds
  std::string method;
};

/// Averages the net benefits of posterior draws (mu), counts how often each
/// treatment is optimal (p, ties to the lowest index) and records the
/// sample variances.
PosteriorSummary summarize_posterior(std::span<const ParameterDraw> draws,
                                     const DecisionModel& model);

/// For s = 0..S-1: theta_s from the prior, X_s ~ p(X | theta_s), R posterior
/// draws given X_s, summarized. Outer iterations run in parallel; each uses
/// seeds derived from (seed, s) only.
std::vector<PosteriorSummary> nmc_summaries(const StudyDesign& design, const PriorSpec& prior,
                                            const DecisionModel& model, std::size_t S,
                                            std::size_t R, std::uint64_t seed,
                                            const McmcSettings& mcmc = {}, unsigned threads = 0);

/// S x D matrix of the summaries' mu.
Eigen::MatrixXd summary_means(std::span<const PosteriorSummary> summaries);

EvsiEstimate nmc_evsi(std::span<const PosteriorSummary> summaries);

EvsiEstimate nmc_evsi_im(std::span<const PosteriorSummary> summaries,
                         const MarketShareFunction& market, const CurrentShares& shares);

}  // namespace voi
