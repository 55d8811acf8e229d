#include "voi/model.hpp"

#include <cmath>
#include <sstream>

#include "voi/error.hpp"
#include "voi/parallel.hpp"

namespace voi {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << name << " must be positive and finite, got " << value;
    throw DomainError(os.str());
  }
}

void require_open_unit(double value, const char* name) {
  if (!(value > 0.0 && value < 1.0)) {
    std::ostringstream os;
    os << name << " must lie in (0, 1), got " << value;
    throw DomainError(os.str());
  }
}

double beta_from_gammas(std::gamma_distribution<double>& a, std::gamma_distribution<double>& b,
                        rng::Engine& g) {
  const double x = a(g);
  const double y = b(g);
  return x / (x + y);
}

}  // namespace

void FixedParams::validate() const {
  require_positive(life_years, "life_years");
  require_positive(event_cost, "event_cost");
  require_positive(treatment_cost, "treatment_cost");
  require_positive(side_effect_cost, "side_effect_cost");
  require_positive(side_effect_qaly_loss, "side_effect_qaly_loss");
  require_positive(willingness_to_pay, "willingness_to_pay");
  if (life_years < 1.0) throw DomainError("life_years must be at least 1");
}

void PriorSpec::validate() const {
  require_positive(event_prob.alpha, "event_prob.alpha");
  require_positive(event_prob.beta, "event_prob.beta");
  require_positive(log_odds_ratio.variance, "log_odds_ratio.variance");
  require_positive(side_effect_prob.alpha, "side_effect_prob.alpha");
  require_positive(side_effect_prob.beta, "side_effect_prob.beta");
  require_positive(logit_event_quality.variance, "logit_event_quality.variance");
  if (!std::isfinite(log_odds_ratio.mean) || !std::isfinite(logit_event_quality.mean))
    throw DomainError("prior means must be finite");
}

const char* to_string(Parameter p) {
  switch (p) {
    case Parameter::EventProb: return "P_C";
    case Parameter::OddsRatio: return "OR";
    case Parameter::SideEffectProb: return "P_SE";
    case Parameter::EventQuality: return "Q_C";
  }
  return "?";
}

double derive_pt(double event_prob, double odds_ratio) {
  require_open_unit(event_prob, "P_C");
  require_positive(odds_ratio, "OR");
  return event_prob * odds_ratio / (1.0 - event_prob + event_prob * odds_ratio);
}

ParameterDraw ParameterDraw::make(double event_prob, double odds_ratio, double side_effect_prob,
                                  double event_quality) {
  ParameterDraw d;
  d.event_prob = event_prob;
  d.odds_ratio = odds_ratio;
  d.side_effect_prob = side_effect_prob;
  d.event_quality = event_quality;
  d.treated_event_prob = derive_pt(event_prob, odds_ratio);
  return d;
}

double ParameterDraw::get(Parameter p) const {
  switch (p) {
    case Parameter::EventProb: return event_prob;
    case Parameter::OddsRatio: return odds_ratio;
    case Parameter::SideEffectProb: return side_effect_prob;
    case Parameter::EventQuality: return event_quality;
  }
  return 0.0;
}

ParameterDraw ParameterDraw::with(Parameter p, double value) const {
  ParameterDraw d = *this;
  switch (p) {
    case Parameter::EventProb: d.event_prob = value; break;
    case Parameter::OddsRatio: d.odds_ratio = value; break;
    case Parameter::SideEffectProb: d.side_effect_prob = value; break;
    case Parameter::EventQuality: d.event_quality = value; break;
  }
  return make(d.event_prob, d.odds_ratio, d.side_effect_prob, d.event_quality);
}

double net_benefit_standard(const ParameterDraw& d, const FixedParams& f) {
  const double L = f.life_years;
  const double effects =
      d.event_prob * L * (1.0 + d.event_quality) / 2.0 + (1.0 - d.event_prob) * L;
  return f.willingness_to_pay * effects - d.event_prob * f.event_cost;
}

double net_benefit_novel(const ParameterDraw& d, const FixedParams& f) {
  const double L = f.life_years;
  const double pt = d.treated_event_prob;
  const double pse = d.side_effect_prob;
  const double after_event = L * (1.0 + d.event_quality) / 2.0;
  const double effects = pt * pse * (after_event - f.side_effect_qaly_loss) +
                         pt * (1.0 - pse) * after_event +
                         (1.0 - pt) * pse * (L - f.side_effect_qaly_loss) +
                         (1.0 - pt) * (1.0 - pse) * L;
  const double costs = f.treatment_cost + pt * f.event_cost + pse * f.side_effect_cost;
  return f.willingness_to_pay * effects - costs;
}

DecisionModel::DecisionModel(FixedParams fixed, std::vector<NetBenefitFn> treatments,
                             std::vector<std::string> names)
    : fixed_(fixed), treatments_(std::move(treatments)), names_(std::move(names)) {
  fixed_.validate();
  if (treatments_.size() < 2) throw DomainError("a decision needs at least two treatments");
  if (names_.size() != treatments_.size())
    throw DomainError("one name is required per treatment");
}

DecisionModel DecisionModel::case_study(const FixedParams& fixed) {
  return DecisionModel(fixed, {net_benefit_standard, net_benefit_novel},
                       {"standard_care", "novel_treatment"});
}

void DecisionModel::evaluate(const ParameterDraw& draw, std::span<double> out) const {
  for (std::size_t d = 0; d < treatments_.size(); ++d) out[d] = treatments_[d](draw, fixed_);
}

PriorSampler::PriorSampler(const PriorSpec& spec)
    : pc_a_(spec.event_prob.alpha),
      pc_b_(spec.event_prob.beta),
      pse_a_(spec.side_effect_prob.alpha),
      pse_b_(spec.side_effect_prob.beta),
      log_or_(spec.log_odds_ratio.mean, std::sqrt(spec.log_odds_ratio.variance)),
      logit_qc_(spec.logit_event_quality.mean, std::sqrt(spec.logit_event_quality.variance)) {
  spec.validate();
}

double PriorSampler::event_prob(rng::Engine& g) { return beta_from_gammas(pc_a_, pc_b_, g); }
double PriorSampler::odds_ratio(rng::Engine& g) { return std::exp(log_or_(g)); }
double PriorSampler::side_effect_prob(rng::Engine& g) {
  return beta_from_gammas(pse_a_, pse_b_, g);
}
double PriorSampler::event_quality(rng::Engine& g) { return inv_logit(logit_qc_(g)); }

ParameterDraw PriorSampler::draw(rng::Engine& g) {
  const double pc = event_prob(g);
  const double odds = odds_ratio(g);
  const double pse = side_effect_prob(g);
  const double qc = event_quality(g);
  return ParameterDraw::make(pc, odds, pse, qc);
}

PsaSample sample_prior(const PriorSpec& spec, const DecisionModel& model, std::size_t S,
                       std::uint64_t seed, unsigned threads) {
  if (S < 2) throw DomainError("PSA size S must be at least 2");
  spec.validate();
  PsaSample psa;
  psa.seed = seed;
  psa.draws.resize(S);
  psa.nb.resize(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(model.treatments()));
  std::vector<double> row_buffer(S * model.treatments());
  const PriorSampler prototype(spec);
  parallel_for(
      S,
      [&](std::size_t i) {
        PriorSampler sampler = prototype;
        auto engine = rng::make_engine(seed, rng::Stream::Prior, i);
        psa.draws[i] = sampler.draw(engine);
        model.evaluate(psa.draws[i],
                       std::span(row_buffer).subspan(i * model.treatments(), model.treatments()));
      },
      threads);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t d = 0; d < model.treatments(); ++d)
      psa.nb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
          row_buffer[i * model.treatments() + d];
  return psa;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t d = 1; d < values.size(); ++d)
    if (values[d] > values[best]) best = d;
  return best;
}

std::vector<double> prob_cost_effective(const Eigen::MatrixXd& nb) {
  const auto D = static_cast<std::size_t>(nb.cols());
  std::vector<std::size_t> wins(D, 0);
  std::vector<double> row(D);
  for (Eigen::Index i = 0; i < nb.rows(); ++i) {
    for (std::size_t d = 0; d < D; ++d) row[d] = nb(i, static_cast<Eigen::Index>(d));
    ++wins[argmax(row)];
  }
  // The last component is the complement so the vector sums to exactly 1.
  std::vector<double> p(D);
  double assigned = 0.0;
  for (std::size_t d = 0; d + 1 < D; ++d) {
    p[d] = static_cast<double>(wins[d]) / static_cast<double>(nb.rows());
    assigned += p[d];
  }
  p[D - 1] = 1.0 - assigned;
  return p;
}

std::vector<double> prob_cost_effective(const PsaSample& psa) {
  return prob_cost_effective(psa.nb);
}

std::vector<double> expected_nb(const Eigen::MatrixXd& nb) {
  std::vector<double> mean(static_cast<std::size_t>(nb.cols()));
  for (Eigen::Index d = 0; d < nb.cols(); ++d) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < nb.rows(); ++i) sum += nb(i, d);
    mean[static_cast<std::size_t>(d)] = sum / static_cast<double>(nb.rows());
  }
  return mean;
}

std::vector<double> expected_nb(const PsaSample& psa) { return expected_nb(psa.nb); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace voi
