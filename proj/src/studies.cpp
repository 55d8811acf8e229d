#include "voi/studies.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "voi/error.hpp"

namespace voi {

const char* to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::SideEffects: return "side_effects";
    case StudyKind::QualityOfLife: return "quality_of_life";
    case StudyKind::EffectivenessRct: return "effectiveness_rct";
  }
  return "?";
}

std::vector<Parameter> StudyDesign::informed() const {
  switch (kind) {
    case StudyKind::SideEffects: return {Parameter::SideEffectProb};
    case StudyKind::QualityOfLife: return {Parameter::EventQuality};
    case StudyKind::EffectivenessRct: return {Parameter::EventProb, Parameter::OddsRatio};
  }
  return {};
}

void StudyDesign::validate() const {
  if (n < 1) throw DomainError("study sample size n must be at least 1");
  if (!(outcome_variance > 0.0)) throw DomainError("outcome_variance must be positive");
}

Dataset simulate_dataset(const StudyDesign& design, const ParameterDraw& draw,
                         std::uint64_t seed) {
  design.validate();
  rng::Engine engine(seed);
  Dataset data;
  data.design = design;
  switch (design.kind) {
    case StudyKind::SideEffects: {
      std::binomial_distribution<int> events(design.n, draw.side_effect_prob);
      data.payload = SideEffectsData{events(engine), design.n};
      data.n_effective = design.n;
      break;
    }
    case StudyKind::QualityOfLife: {
      // The sum of n iid N(m, s2) scores is N(n m, n s2).
      const double n = design.n;
      std::normal_distribution<double> total(n * logit(draw.event_quality),
                                             std::sqrt(n * design.outcome_variance));
      data.payload = QualityOfLifeData{total(engine), design.n};
      data.n_effective = design.n;
      break;
    }
    case StudyKind::EffectivenessRct: {
      std::binomial_distribution<int> control(design.n, draw.event_prob);
      std::binomial_distribution<int> treated(design.n, draw.treated_event_prob);
      const int x_control = control(engine);
      const int x_treated = treated(engine);
      data.payload = EffectivenessData{x_control, x_treated, design.n};
      data.n_effective = 2 * design.n;
      break;
    }
  }
  return data;
}

namespace {

template <typename T>
const T& payload_as(const Dataset& data, const char* expected) {
  const T* p = std::get_if<T>(&data.payload);
  if (p == nullptr) {
    std::ostringstream os;
    os << "dataset kind mismatch: expected " << expected << " data, got "
       << to_string(data.design.kind);
    throw DomainError(os.str());
  }
  return *p;
}

}  // namespace

PosteriorDraws posterior_side_effects(const Dataset& data, const PriorSpec& prior,
                                      std::size_t R, std::uint64_t seed) {
  const auto& obs = payload_as<SideEffectsData>(data, "side_effects");
  if (R < 2) throw DomainError("posterior sample size R must be at least 2");
  if (obs.events < 0 || obs.events > obs.n) throw DomainError("events must lie in [0, n]");

  rng::Engine engine(seed);
  PriorSampler others(prior);
  std::gamma_distribution<double> ga(prior.side_effect_prob.alpha + obs.events);
  std::gamma_distribution<double> gb(prior.side_effect_prob.beta + (obs.n - obs.events));

  PosteriorDraws out;
  out.seed = seed;
  out.draws.reserve(R);
  for (std::size_t r = 0; r < R; ++r) {
    const double pc = others.event_prob(engine);
    const double odds = others.odds_ratio(engine);
    const double x = ga(engine);
    const double pse = x / (x + gb(engine));
    const double qc = others.event_quality(engine);
    out.draws.push_back(ParameterDraw::make(pc, odds, pse, qc));
  }
  return out;
}

NormalPosterior quality_posterior(const QualityOfLifeData& data, const NormalPrior& prior,
                                  double outcome_variance) {
  const double precision = 1.0 / prior.variance + data.n / outcome_variance;
  const double mean = (prior.mean / prior.variance + data.sum_logit / outcome_variance) / precision;
  return {mean, 1.0 / precision};
}

PosteriorDraws posterior_quality(const Dataset& data, const PriorSpec& prior, std::size_t R,
                                 std::uint64_t seed) {
  const auto& obs = payload_as<QualityOfLifeData>(data, "quality_of_life");
  if (R < 2) throw DomainError("posterior sample size R must be at least 2");
  if (obs.n < 0) throw DomainError("n must be nonnegative");

  const NormalPosterior post =
      quality_posterior(obs, prior.logit_event_quality, data.design.outcome_variance);
  rng::Engine engine(seed);
  PriorSampler others(prior);
  std::normal_distribution<double> logit_qc(post.mean, std::sqrt(post.variance));

  PosteriorDraws out;
  out.seed = seed;
  out.draws.reserve(R);
  for (std::size_t r = 0; r < R; ++r) {
    const double pc = others.event_prob(engine);
    const double odds = others.odds_ratio(engine);
    const double pse = others.side_effect_prob(engine);
    const double qc = inv_logit(logit_qc(engine));
    out.draws.push_back(ParameterDraw::make(pc, odds, pse, qc));
  }
  return out;
}

PosteriorDraws posterior_effectiveness(const Dataset& data, const PriorSpec& prior,
                                       std::size_t R, std::uint64_t seed,
                                       const McmcSettings& mcmc) {
  const auto& obs = payload_as<EffectivenessData>(data, "effectiveness_rct");
  if (R < 2) throw DomainError("posterior sample size R must be at least 2");

  rng::Engine engine(seed);
  const RctChain chain = run_rct_chain(obs, prior, R, engine, mcmc);
  PriorSampler others(prior);

  PosteriorDraws out;
  out.seed = seed;
  out.acceptance_rate = chain.acceptance_rate;
  out.draws.reserve(R);
  for (std::size_t r = 0; r < R; ++r) {
    const double pc = inv_logit(chain.logit_event_prob[r]);
    const double odds = std::exp(chain.log_odds_ratio[r]);
    const double pse = others.side_effect_prob(engine);
    const double qc = others.event_quality(engine);
    out.draws.push_back(ParameterDraw::make(pc, odds, pse, qc));
  }
  return out;
}

PosteriorDraws sample_posterior(const Dataset& data, const PriorSpec& prior, std::size_t R,
                                std::uint64_t seed, const McmcSettings& mcmc) {
  switch (data.design.kind) {
    case StudyKind::SideEffects: return posterior_side_effects(data, prior, R, seed);
    case StudyKind::QualityOfLife: return posterior_quality(data, prior, R, seed);
    case StudyKind::EffectivenessRct:
      return posterior_effectiveness(data, prior, R, seed, mcmc);
  }
  throw DomainError("unknown study kind");
}

}  // namespace voi
