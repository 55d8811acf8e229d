#pragma once

// Moment Matching estimation of implementation-adjusted EVSI.
//
// A small number Q of datasets, generated at spread-out quantiles of the
// informed parameters, get full nested posterior simulations. Their average
// posterior variance fixes how far the PSA-level conditional expectations
// E[NB_d | phi] must be shrunk to mimic posterior expected net benefits, and
// their (incremental net benefit, probability of cost-effectiveness) pairs
// train a generalized logistic curve used to predict the probability for
// every rescaled PSA row.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "voi/implementation.hpp"
#include "voi/logistic.hpp"
#include "voi/model.hpp"
#include "voi/nmc.hpp"
#include "voi/studies.hpp"
#include "voi/variance_curve.hpp"

namespace voi {

struct QuantileDataset {
  ParameterDraw generator;  // parameter values the dataset was simulated at
  Dataset data;
};

/// Dataset q (0-based) is simulated with every informed parameter at its
/// ((q + 0.5) / Q) marginal sample quantile and the other parameters at
/// their medians. `sizes`, when non-empty, overrides the design's n per
/// dataset.
std::vector<QuantileDataset> quantile_datasets(const PsaSample& psa, const StudyDesign& design,
                                               std::size_t Q, std::uint64_t seed,
                                               std::span<const int> sizes = {});

/// Type-7 sample quantile of `values` (which need not be sorted).
double sample_quantile(std::vector<double> values, double prob);

struct ConditionalExpectationFit {
  Eigen::MatrixXd fitted;  // S x D, g_d(phi_s)
  std::string basis;
  std::vector<double> residual_variance;
};

/// Smooth regression of each net-benefit column on the informed parameters
/// (on the logit / log scale). If the study informs every parameter the
/// net benefits are returned unchanged.
ConditionalExpectationFit fit_conditional_expectation(const PsaSample& psa,
                                                      const StudyDesign& design);

/// Nested posterior summaries for a set of datasets, run in parallel with
/// seeds derived from (seed, q). Parameters the study does not inform keep
/// their prior as posterior, so draw r takes them from PSA row r mod S
/// instead of drawing afresh. That shares random numbers with the prior
/// variance and stops its Monte Carlo error leaking into the target.
std::vector<PosteriorSummary> nested_summaries(std::span<const QuantileDataset> datasets,
                                               const PsaSample& psa, const PriorSpec& prior,
                                               const DecisionModel& model, std::size_t R,
                                               std::uint64_t seed, const McmcSettings& mcmc = {},
                                               unsigned threads = 0);

/// Sample variance of each net-benefit column.
std::vector<double> prior_variances(const PsaSample& psa);

/// Var_prior(NB_d) - mean_q Var(NB_d | X_q), kept inside [0, Var_prior(NB_d)].
std::vector<double> variance_reduction_target(const PsaSample& psa,
                                              std::span<const PosteriorSummary> nested);

/// mean(g_d) + (g_d - mean(g_d)) * sqrt(target_d / Var(g_d)); constant at
/// mean(g_d) when Var(g_d) is zero.
Eigen::MatrixXd rescale(const ConditionalExpectationFit& fit, std::span<const double> target);

struct MmSettings {
  std::size_t Q = 50;
  std::size_t R = 10'000;
  McmcSettings mcmc;
  LogisticOptions logistic;
  unsigned threads = 0;
  // Bootstrap replicates for the standard error: each resamples the PSA
  // rows and the Q nested summaries and redoes the target, rescaling and
  // logistic fit. 0 falls back to the delta method over PSA rows, which
  // ignores the nested-simulation noise.
  std::size_t bootstrap = 200;
};

struct MmResult {
  EvsiEstimate evsi_im;
  EvsiEstimate evsi;  // unadjusted, on the same rescaled values
  LogisticFit fit;
  Eigen::MatrixXd mu;            // S x D rescaled posterior means
  std::vector<double> inb;       // S incremental net benefits, target minus other
  std::vector<double> p_target;  // S predicted probabilities
  std::vector<PosteriorSummary> nested;
  std::vector<double> target;    // per-treatment variance targets
};

/// Full Moment Matching pipeline for a two-treatment decision.
MmResult mm_evsi_im(const PsaSample& psa, const StudyDesign& design, const PriorSpec& prior,
                    const DecisionModel& model, const MarketShareFunction& market,
                    const CurrentShares& shares, const MmSettings& settings,
                    std::uint64_t seed);

struct SizeRange {
  int min = 10;
  int max = 200;
  bool operator==(const SizeRange&) const = default;
};

/// Sample sizes for the Q nested datasets: Q values evenly spread over the
/// range, rounded, assigned to quantiles through a seeded permutation.
std::vector<int> size_sequence(const SizeRange& range, std::size_t Q, std::uint64_t seed);

struct MmSizeResult {
  std::vector<int> n_grid;
  std::vector<EvsiEstimate> estimates;  // one per n_grid entry
  std::vector<EvsiEstimate> standard;   // unadjusted EVSI per n_grid entry
  LogisticFit fit;                      // with sample-size exponent u
  std::vector<VarianceCurveFit> curves; // one per treatment
  std::vector<int> sizes;               // N_q
  std::vector<PosteriorSummary> nested;
};

/// Moment Matching across sample sizes: one nested run over datasets of
/// varying size, then per n a fitted variance target, rescaled means and
/// probabilities from the size-aware logistic curve.
MmSizeResult mm_evsi_im_by_n(const PsaSample& psa, const StudyDesign& design,
                             const PriorSpec& prior, const DecisionModel& model,
                             const MarketShareFunction& market, const CurrentShares& shares,
                             const MmSettings& settings, const SizeRange& range,
                             std::span<const int> n_grid, std::uint64_t seed);

}  // namespace voi
