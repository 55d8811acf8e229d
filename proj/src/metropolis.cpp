// Random-walk Metropolis for the two-arm trial posterior over
// (logit P_C, log OR). Since logit P_T = logit P_C + log OR, the
// likelihood of both arms is cheap to evaluate in these coordinates.

#include <array>
#include <cmath>
#include <sstream>

#include "voi/error.hpp"
#include "voi/studies.hpp"

namespace voi {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct Proposal {
  // Lower-triangular Cholesky factor of the proposal covariance (before scaling).
  double l11, l21, l22;
};

Proposal cholesky(double v11, double v12, double v22) {
  const double l11 = std::sqrt(v11);
  const double l21 = v12 / l11;
  const double rest = v22 - l21 * l21;
  return {l11, l21, std::sqrt(std::max(rest, 1e-12 * v22))};
}

}  // namespace

double rct_log_posterior(const EffectivenessData& data, const PriorSpec& prior,
                         double logit_event_prob, double log_odds_ratio) {
  const double a = prior.event_prob.alpha + data.control_events;
  const double b = prior.event_prob.beta + (data.per_arm - data.control_events);
  const double treated_logit = logit_event_prob + log_odds_ratio;
  const double dev = log_odds_ratio - prior.log_odds_ratio.mean;
  // Beta prior on P_C carries the Jacobian p(1-p) of the logit transform.
  return -a * softplus(-logit_event_prob) - b * softplus(logit_event_prob) -
         data.treated_events * softplus(-treated_logit) -
         (data.per_arm - data.treated_events) * softplus(treated_logit) -
         0.5 * dev * dev / prior.log_odds_ratio.variance;
}

RctChain run_rct_chain(const EffectivenessData& data, const PriorSpec& prior, std::size_t R,
                       rng::Engine& engine, const McmcSettings& mcmc) {
  if (data.per_arm < 0 || data.control_events < 0 || data.treated_events < 0 ||
      data.control_events > data.per_arm || data.treated_events > data.per_arm)
    throw DomainError("trial counts must lie in [0, per_arm]");
  if (mcmc.adaptation < 2 || mcmc.burn_in < 0 || mcmc.thin < 1)
    throw DomainError("invalid Metropolis settings");

  std::normal_distribution<double> stdnorm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Start at the conjugate posterior of the control arm and the prior mean
  // of log OR; size the initial proposal from rough normal approximations.
  const double a = prior.event_prob.alpha + data.control_events;
  const double b = prior.event_prob.beta + (data.per_arm - data.control_events);
  const double var_logit_pc = 1.0 / a + 1.0 / b;
  const double var_treated_logit =
      1.0 / (data.treated_events + 0.5) + 1.0 / (data.per_arm - data.treated_events + 0.5);
  const double var_log_or =
      1.0 / (1.0 / prior.log_odds_ratio.variance + 1.0 / (var_treated_logit + var_logit_pc));

  std::array<double, 2> x{std::log(a / b), prior.log_odds_ratio.mean};
  double log_post = rct_log_posterior(data, prior, x[0], x[1]);
  Proposal shape = cholesky(var_logit_pc, 0.0, var_log_or);
  double log_scale = std::log(2.38 / std::sqrt(2.0));

  auto step = [&](double scale) {
    const double z1 = stdnorm(engine);
    const double z2 = stdnorm(engine);
    const double c0 = x[0] + scale * shape.l11 * z1;
    const double c1 = x[1] + scale * (shape.l21 * z1 + shape.l22 * z2);
    const double cand = rct_log_posterior(data, prior, c0, c1);
    if (std::log(unif(engine)) < cand - log_post) {
      x = {c0, c1};
      log_post = cand;
      return true;
    }
    return false;
  };

  // Adaptation: Robbins-Monro on the proposal scale towards 0.3 acceptance;
  // halfway through, the proposal shape switches to the empirical
  // covariance of the second quarter of the adaptation run.
  const int half = mcmc.adaptation / 2;
  const int quarter = mcmc.adaptation / 4;
  double s0 = 0, s1 = 0, s00 = 0, s01 = 0, s11 = 0;
  int count = 0;
  for (int t = 0; t < mcmc.adaptation; ++t) {
    const bool accepted = step(std::exp(log_scale));
    log_scale += ((accepted ? 1.0 : 0.0) - 0.3) / std::sqrt(1.0 + t);
    if (t >= quarter && t < half) {
      s0 += x[0];
      s1 += x[1];
      s00 += x[0] * x[0];
      s01 += x[0] * x[1];
      s11 += x[1] * x[1];
      ++count;
    }
    if (t == half - 1 && count > 10) {
      const double m0 = s0 / count, m1 = s1 / count;
      const double v00 = s00 / count - m0 * m0;
      const double v01 = s01 / count - m0 * m1;
      const double v11 = s11 / count - m1 * m1;
      if (v00 > 0.0 && v11 > 0.0 && v00 * v11 - v01 * v01 > 0.0) {
        shape = cholesky(v00, v01, v11);
        log_scale = std::log(2.38 / std::sqrt(2.0));
      }
    }
  }

  const double scale = std::exp(log_scale);
  for (int t = 0; t < mcmc.burn_in; ++t) step(scale);

  RctChain chain;
  chain.proposal_scale = scale;
  chain.logit_event_prob.reserve(R);
  chain.log_odds_ratio.reserve(R);
  std::size_t accepted = 0;
  const std::size_t iterations = R * static_cast<std::size_t>(mcmc.thin);
  for (std::size_t t = 0; t < iterations; ++t) {
    if (step(scale)) ++accepted;
    if ((t + 1) % static_cast<std::size_t>(mcmc.thin) == 0) {
      chain.logit_event_prob.push_back(x[0]);
      chain.log_odds_ratio.push_back(x[1]);
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(iterations);
  if (!(chain.acceptance_rate > mcmc.min_acceptance &&
        chain.acceptance_rate < mcmc.max_acceptance)) {
    std::ostringstream os;
    os << "Metropolis acceptance rate " << chain.acceptance_rate << " outside ("
       << mcmc.min_acceptance << ", " << mcmc.max_acceptance << ")";
    throw SamplerError(os.str());
  }
  return chain;
}

}  // namespace voi
