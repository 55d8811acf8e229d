#pragma once

// Decision model for the critical-event example: two treatments (standard
// care and a novel treatment), four uncertain parameters, and the
// probabilistic analysis (PSA) that propagates their uncertainty.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "voi/rng.hpp"

namespace voi {

/// Known model constants.
struct FixedParams {
  double life_years = 30.0;               // L
  double event_cost = 200'000.0;          // C_C
  double treatment_cost = 15'000.0;       // C_T
  double side_effect_cost = 100'000.0;    // C_SE
  double side_effect_qaly_loss = 1.0;     // Q_SE
  double willingness_to_pay = 75'000.0;   // lambda

  /// Throws DomainError unless every value is positive and L >= 1.
  void validate() const;

  bool operator==(const FixedParams&) const = default;
};

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
  double variance() const {
    const double s = alpha + beta;
    return alpha * beta / (s * s * (s + 1.0));
  }
  bool operator==(const BetaPrior&) const = default;
};

/// Normal prior parameterized by its variance, not its standard deviation.
struct NormalPrior {
  double mean = 0.0;
  double variance = 1.0;

  bool operator==(const NormalPrior&) const = default;
};

/// Independent priors on P_C, log(OR), P_SE and logit(Q_C).
struct PriorSpec {
  BetaPrior event_prob{15.0, 85.0};
  NormalPrior log_odds_ratio{-1.5, 1.0 / 3.0};
  BetaPrior side_effect_prob{3.0, 9.0};
  NormalPrior logit_event_quality{0.6, 1.0 / 6.0};

  void validate() const;

  bool operator==(const PriorSpec&) const = default;
};

/// Identifies one of the uncertain model parameters.
enum class Parameter { EventProb, OddsRatio, SideEffectProb, EventQuality };

inline constexpr Parameter kAllParameters[] = {
    Parameter::EventProb, Parameter::OddsRatio, Parameter::SideEffectProb,
    Parameter::EventQuality};

const char* to_string(Parameter p);

/// One joint draw of the uncertain parameters. The treated event probability
/// is always derived from (event_prob, odds_ratio); build draws through
/// make() so the two can never disagree.
struct ParameterDraw {
  double event_prob = 0.0;          // P_C
  double odds_ratio = 1.0;          // OR
  double side_effect_prob = 0.0;    // P_SE
  double event_quality = 0.0;       // Q_C
  double treated_event_prob = 0.0;  // P_T

  static ParameterDraw make(double event_prob, double odds_ratio, double side_effect_prob,
                            double event_quality);

  double get(Parameter p) const;
  ParameterDraw with(Parameter p, double value) const;

  bool operator==(const ParameterDraw&) const = default;
};

/// P_T = P_C OR / (1 - P_C + P_C OR). Throws DomainError unless
/// P_C is in (0,1) and OR > 0.
double derive_pt(double event_prob, double odds_ratio);

double net_benefit_standard(const ParameterDraw& draw, const FixedParams& fixed);
double net_benefit_novel(const ParameterDraw& draw, const FixedParams& fixed);

using NetBenefitFn = std::function<double(const ParameterDraw&, const FixedParams&)>;

/// Fixed constants plus one net-benefit function per treatment. Treatment
/// index 0 is standard care by convention.
class DecisionModel {
 public:
  DecisionModel(FixedParams fixed, std::vector<NetBenefitFn> treatments,
                std::vector<std::string> names);

  /// Standard care and the novel treatment.
  static DecisionModel case_study(const FixedParams& fixed = {});

  std::size_t treatments() const { return treatments_.size(); }
  const FixedParams& fixed() const { return fixed_; }
  const std::vector<std::string>& names() const { return names_; }

  double net_benefit(std::size_t treatment, const ParameterDraw& draw) const {
    return treatments_[treatment](draw, fixed_);
  }
  void evaluate(const ParameterDraw& draw, std::span<double> out) const;

 private:
  FixedParams fixed_;
  std::vector<NetBenefitFn> treatments_;
  std::vector<std::string> names_;
};

/// Samplers for each prior marginal, constructed once and reused.
class PriorSampler {
 public:
  explicit PriorSampler(const PriorSpec& spec);

  double event_prob(rng::Engine& g);
  double odds_ratio(rng::Engine& g);
  double side_effect_prob(rng::Engine& g);
  double event_quality(rng::Engine& g);
  ParameterDraw draw(rng::Engine& g);

 private:
  std::gamma_distribution<double> pc_a_, pc_b_, pse_a_, pse_b_;
  std::normal_distribution<double> log_or_, logit_qc_;
};

struct PsaSample {
  std::vector<ParameterDraw> draws;
  Eigen::MatrixXd nb;  // S x D, row i = net benefits of draws[i]
  std::uint64_t seed = 0;

  std::size_t size() const { return draws.size(); }
};

/// S independent prior draws with their net benefits. Draw i uses its own
/// engine seeded from (seed, i) so the result is independent of `threads`.
PsaSample sample_prior(const PriorSpec& spec, const DecisionModel& model, std::size_t S,
                       std::uint64_t seed, unsigned threads = 0);

/// Index of the largest element; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Fraction of rows in which each column attains the row maximum.
std::vector<double> prob_cost_effective(const Eigen::MatrixXd& nb);
std::vector<double> prob_cost_effective(const PsaSample& psa);

std::vector<double> expected_nb(const Eigen::MatrixXd& nb);
std::vector<double> expected_nb(const PsaSample& psa);

double logit(double p);
double inv_logit(double x);

}  // namespace voi
