#include <doctest.h>

#include <cmath>
#include <vector>

#include <gsl/gsl_cdf.h>

#include "stats.hpp"
#include "voi/error.hpp"
#include "voi/model.hpp"

using namespace voi;
using voi::testing::ks_critical;
using voi::testing::ks_distance;

namespace {

// Same quantities as the model, rearranged as "life expectancy minus losses".
double nb_standard_oracle(double pc, double qc) {
  const double L = 30, lambda = 75000;
  return lambda * (L - pc * L * (1 - qc) / 2) - pc * 200000;
}

double nb_novel_oracle(double pc, double odds, double pse, double qc) {
  const double L = 30, lambda = 75000;
  const double pt = 1 / (1 + (1 - pc) / (pc * odds));
  return lambda * (L - pt * L * (1 - qc) / 2 - pse * 1.0) - 15000 - pt * 200000 - pse * 100000;
}

}  // namespace

TEST_CASE("treated event probability") {
  CHECK(derive_pt(0.15, 1.0) == doctest::Approx(0.15));
  CHECK(derive_pt(0.15, std::exp(-1.5)) == doctest::Approx(0.0379).epsilon(1e-3));
  CHECK_THROWS_AS(derive_pt(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(derive_pt(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(derive_pt(0.2, 0.0), DomainError);
  CHECK_THROWS_AS(derive_pt(0.2, -1.0), DomainError);
}

TEST_CASE("net benefit formulas") {
  const FixedParams f;
  for (double pc : {0.05, 0.15, 0.4})
    for (double odds : {0.1, 0.22, 1.0, 2.0})
      for (double pse : {0.0, 0.25, 0.9})
        for (double qc : {0.2, 0.65, 0.99}) {
          const auto d = ParameterDraw::make(pc, odds, pse, qc);
          CHECK(net_benefit_standard(d, f) == doctest::Approx(nb_standard_oracle(pc, qc)));
          CHECK(net_benefit_novel(d, f) == doctest::Approx(nb_novel_oracle(pc, odds, pse, qc)));
        }
}

TEST_CASE("parameter draws keep P_T consistent") {
  const auto d = ParameterDraw::make(0.2, 0.5, 0.1, 0.7);
  const auto e = d.with(Parameter::OddsRatio, 2.0);
  CHECK(e.treated_event_prob == doctest::Approx(derive_pt(0.2, 2.0)));
  CHECK(e.get(Parameter::OddsRatio) == 2.0);
  CHECK(e.get(Parameter::SideEffectProb) == 0.1);
}

TEST_CASE("invalid model constants are rejected") {
  FixedParams f;
  f.event_cost = -1;
  CHECK_THROWS_AS(f.validate(), DomainError);
  FixedParams g;
  g.life_years = 0.5;
  CHECK_THROWS_AS(g.validate(), DomainError);
  PriorSpec p;
  p.log_odds_ratio.variance = 0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("prior draws follow the marginal distributions") {
  const PriorSpec spec;
  const auto model = DecisionModel::case_study();
  const std::size_t S = 20000;
  const auto psa = sample_prior(spec, model, S, 11, 1);
  std::vector<double> pc, log_or, pse, logit_qc;
  for (const auto& d : psa.draws) {
    pc.push_back(d.event_prob);
    log_or.push_back(std::log(d.odds_ratio));
    pse.push_back(d.side_effect_prob);
    logit_qc.push_back(logit(d.event_quality));
  }
  const double crit = ks_critical(S);
  CHECK(ks_distance(pc, [](double x) { return gsl_cdf_beta_P(x, 15, 85); }) < crit);
  CHECK(ks_distance(pse, [](double x) { return gsl_cdf_beta_P(x, 3, 9); }) < crit);
  CHECK(ks_distance(log_or, [](double x) {
          return gsl_cdf_gaussian_P(x + 1.5, std::sqrt(1.0 / 3.0));
        }) < crit);
  CHECK(ks_distance(logit_qc, [](double x) {
          return gsl_cdf_gaussian_P(x - 0.6, std::sqrt(1.0 / 6.0));
        }) < crit);

  // Moments within 3 standard errors.
  auto within = [](const std::vector<double>& x, double mu, double var) {
    return std::abs(voi::testing::mean(x) - mu) < 3 * std::sqrt(var / x.size());
  };
  CHECK(within(pc, 0.15, spec.event_prob.variance()));
  CHECK(within(pse, 0.25, spec.side_effect_prob.variance()));
  std::vector<double> odds;
  for (double l : log_or) odds.push_back(std::exp(l));
  const double v = 1.0 / 3.0;
  CHECK(within(odds, std::exp(-1.5 + v / 2), (std::exp(v) - 1) * std::exp(-3 + v)));
}

TEST_CASE("PSA is reproducible and independent of the thread count") {
  const auto model = DecisionModel::case_study();
  const auto a = sample_prior(PriorSpec{}, model, 3000, 99, 1);
  const auto b = sample_prior(PriorSpec{}, model, 3000, 99, 4);
  const auto c = sample_prior(PriorSpec{}, model, 3000, 100, 1);
  CHECK(a.nb == b.nb);
  CHECK(a.draws == b.draws);
  CHECK(a.nb != c.nb);
  CHECK_THROWS_AS(sample_prior(PriorSpec{}, model, 1, 1), DomainError);
}

TEST_CASE("current decision at S = 10000") {
  const auto model = DecisionModel::case_study();
  const auto psa = sample_prior(PriorSpec{}, model, 10000, 20210501);
  const auto enb = expected_nb(psa);
  const auto p = prob_cost_effective(psa);
  CHECK(enb[0] == doctest::Approx(2159300).epsilon(0.001));
  CHECK(enb[1] == doctest::Approx(2164900).epsilon(0.001));
  CHECK(std::abs(p[1] - 0.57) <= 0.02);
  CHECK(p[0] + p[1] == 1.0);
}

TEST_CASE("argmax and probability of cost-effectiveness") {
  const std::vector<double> tie{3.0, 3.0, 1.0};
  CHECK(argmax(tie) == 0);
  Eigen::MatrixXd nb(4, 3);
  nb << 1, 2, 3,  //
      3, 2, 1,    //
      0, 5, 5,    //
      1, 1, 0;
  const auto p = prob_cost_effective(nb);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.25);
  CHECK(p[2] == 0.25);
}

TEST_CASE("logit helpers") {
  for (double x : {-800.0, -30.0, -1.0, 0.0, 2.5, 40.0, 800.0}) {
    const double p = inv_logit(x);
    CHECK(std::isfinite(p));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK(logit(inv_logit(1.3)) == doctest::Approx(1.3));
}
