#pragma once

// Proposed study designs: simulating their outcomes and drawing posterior
// parameter samples given an outcome.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "voi/model.hpp"

namespace voi {

enum class StudyKind { SideEffects, QualityOfLife, EffectivenessRct };

const char* to_string(StudyKind kind);

struct StudyDesign {
  StudyKind kind = StudyKind::SideEffects;
  int n = 1;  // participants (per arm for the RCT)
  double outcome_variance = 2.0;  // variance of individual logit quality scores

  static StudyDesign side_effects(int n = 60) { return {StudyKind::SideEffects, n, 2.0}; }
  static StudyDesign quality_of_life(int n = 100) { return {StudyKind::QualityOfLife, n, 2.0}; }
  static StudyDesign effectiveness_rct(int n = 200) {
    return {StudyKind::EffectivenessRct, n, 2.0};
  }

  /// Parameters whose posterior the study data change.
  std::vector<Parameter> informed() const;
  void validate() const;

  bool operator==(const StudyDesign&) const = default;
};

struct SideEffectsData {
  int events = 0;
  int n = 0;
};

/// Sufficient statistic of n individual logit quality scores.
struct QualityOfLifeData {
  double sum_logit = 0.0;
  int n = 0;
};

struct EffectivenessData {
  int control_events = 0;
  int treated_events = 0;
  int per_arm = 0;
};

struct Dataset {
  StudyDesign design;
  std::variant<SideEffectsData, QualityOfLifeData, EffectivenessData> payload;
  int n_effective = 0;
};

/// Random-walk Metropolis settings for the RCT posterior.
struct McmcSettings {
  int adaptation = 1000;
  int burn_in = 1000;
  int thin = 5;
  double min_acceptance = 0.05;
  double max_acceptance = 0.95;

  bool operator==(const McmcSettings&) const = default;
};

struct PosteriorDraws {
  std::vector<ParameterDraw> draws;
  std::uint64_t seed = 0;
  std::optional<double> acceptance_rate;  // Metropolis designs only
};

/// One simulated study outcome generated at parameter values `draw`.
Dataset simulate_dataset(const StudyDesign& design, const ParameterDraw& draw,
                         std::uint64_t seed);

/// P_SE ~ Beta(alpha + x, beta + n - x); other parameters from the prior.
PosteriorDraws posterior_side_effects(const Dataset& data, const PriorSpec& prior,
                                      std::size_t R, std::uint64_t seed);

/// Conjugate normal update of logit(Q_C) with known individual variance;
/// other parameters from the prior.
PosteriorDraws posterior_quality(const Dataset& data, const PriorSpec& prior, std::size_t R,
                                 std::uint64_t seed);

/// Joint (P_C, OR) posterior by random-walk Metropolis on (logit P_C, log OR);
/// P_SE and Q_C from the prior. Throws SamplerError when the acceptance rate
/// of the retained chain falls outside the configured band.
PosteriorDraws posterior_effectiveness(const Dataset& data, const PriorSpec& prior,
                                       std::size_t R, std::uint64_t seed,
                                       const McmcSettings& mcmc = {});

/// Dispatches on the dataset's design.
PosteriorDraws sample_posterior(const Dataset& data, const PriorSpec& prior, std::size_t R,
                                std::uint64_t seed, const McmcSettings& mcmc = {});

/// Conjugate posterior of logit(Q_C) as (mean, variance).
struct NormalPosterior {
  double mean;
  double variance;
};
NormalPosterior quality_posterior(const QualityOfLifeData& data, const NormalPrior& prior,
                                  double outcome_variance);

// Metropolis chain on (logit P_C, log OR) for the two-arm trial. Exposed
// for diagnostics and tests.
struct RctChain {
  std::vector<double> logit_event_prob;
  std::vector<double> log_odds_ratio;
  double acceptance_rate = 0.0;
  double proposal_scale = 0.0;
};
RctChain run_rct_chain(const EffectivenessData& data, const PriorSpec& prior, std::size_t R,
                       rng::Engine& engine, const McmcSettings& mcmc);

/// Unnormalized log posterior density of (logit P_C, log OR).
double rct_log_posterior(const EffectivenessData& data, const PriorSpec& prior,
                         double logit_event_prob, double log_odds_ratio);

}  // namespace voi
