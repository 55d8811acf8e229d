#include "voi/moment_matching.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "voi/error.hpp"
#include "voi/parallel.hpp"
#include "voi/smoothing.hpp"

namespace voi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double column_variance(const Eigen::MatrixXd& m, Eigen::Index d) {
  const double mean = m.col(d).mean();
  return (m.col(d).array() - mean).square().sum() / static_cast<double>(m.rows() - 1);
}

std::vector<double> column(const PsaSample& psa, Parameter p) {
  std::vector<double> out(psa.size());
  for (std::size_t i = 0; i < psa.size(); ++i) out[i] = psa.draws[i].get(p);
  return out;
}

// Unconstrained scale used as a regression covariate.
double to_unconstrained(Parameter p, double value) {
  return p == Parameter::OddsRatio ? std::log(value) : logit(value);
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng::Engine engine(seed);
  // Fisher-Yates with an explicit draw so the order is library independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(engine() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

void require_two_treatments(const DecisionModel& model, const MarketShareFunction& market) {
  if (model.treatments() != 2)
    throw DomainError("Moment Matching supports two-treatment decisions only");
  if (market.target > 1) throw DomainError("market-share target index out of range");
}

struct IncrementalPairs {
  std::vector<double> inb;
  std::vector<double> p;
};

IncrementalPairs incremental_pairs(std::span<const PosteriorSummary> nested, std::size_t target) {
  IncrementalPairs out;
  for (const auto& s : nested) {
    out.inb.push_back(s.mu[target] - s.mu[1 - target]);
    out.p.push_back(s.p[target]);
  }
  return out;
}

std::vector<std::size_t> resample(std::size_t n, rng::Engine& engine) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(engine() % n);
  return idx;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<PosteriorSummary> take(std::span<const PosteriorSummary> v,
                                   std::span<const std::size_t> idx) {
  std::vector<PosteriorSummary> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

double spread(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// One bootstrap world: resampled PSA rows (net benefits and their fitted
// conditional expectations) and resampled nested summaries.
struct Replicate {
  PsaSample psa;
  ConditionalExpectationFit g;
  std::vector<PosteriorSummary> nested;
  std::vector<std::size_t> sets;  // which nested summaries were drawn
};

Replicate draw_replicate(const PsaSample& psa, const ConditionalExpectationFit& g,
                         std::span<const PosteriorSummary> nested, std::uint64_t seed,
                         std::size_t b) {
  rng::Engine engine(rng::derive_seed(seed, rng::Stream::Bootstrap, b));
  const auto rows = resample(psa.size(), engine);
  const auto sets = resample(nested.size(), engine);
  Replicate r;
  r.psa.nb = take_rows(psa.nb, rows);
  r.g.fitted = take_rows(g.fitted, rows);
  r.nested = take(nested, sets);
  r.sets = sets;
  return r;
}

std::vector<double> incremental(const Eigen::MatrixXd& mu, std::size_t target) {
  std::vector<double> out(static_cast<std::size_t>(mu.rows()));
  const auto t = static_cast<Eigen::Index>(target);
  for (Eigen::Index s = 0; s < mu.rows(); ++s)
    out[static_cast<std::size_t>(s)] = mu(s, t) - mu(s, 1 - t);
  return out;
}

}  // namespace

double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<QuantileDataset> quantile_datasets(const PsaSample& psa, const StudyDesign& design,
                                               std::size_t Q, std::uint64_t seed,
                                               std::span<const int> sizes) {
  if (Q < 3) throw DomainError("Q must be at least 3");
  if (!sizes.empty() && sizes.size() != Q) throw DomainError("need one sample size per quantile");
  design.validate();

  const auto informed = design.informed();
  std::vector<std::vector<double>> sorted;
  for (Parameter p : kAllParameters) {
    auto v = column(psa, p);
    std::sort(v.begin(), v.end());
    sorted.push_back(std::move(v));
  }
  auto quantile_of = [&](Parameter p, double prob) {
    return sample_quantile(sorted[static_cast<std::size_t>(p)], prob);
  };

  std::vector<QuantileDataset> out;
  out.reserve(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    double values[4];
    for (Parameter p : kAllParameters) values[static_cast<int>(p)] = quantile_of(p, 0.5);
    const double prob = (static_cast<double>(q) + 0.5) / static_cast<double>(Q);
    for (Parameter p : informed) values[static_cast<int>(p)] = quantile_of(p, prob);
    const ParameterDraw generator = ParameterDraw::make(values[0], values[1], values[2], values[3]);
    StudyDesign d = design;
    if (!sizes.empty()) d.n = sizes[q];
    const auto data_seed = rng::derive_seed(seed, rng::Stream::QuantileDataset, q);
    out.push_back({generator, simulate_dataset(d, generator, data_seed)});
  }
  return out;
}

ConditionalExpectationFit fit_conditional_expectation(const PsaSample& psa,
                                                      const StudyDesign& design) {
  const auto informed = design.informed();
  ConditionalExpectationFit out;
  const Eigen::Index D = psa.nb.cols();
  if (informed.size() == std::size(kAllParameters)) {
    out.fitted = psa.nb;
    out.basis = "identity (study informs every parameter)";
    out.residual_variance.assign(static_cast<std::size_t>(D), 0.0);
    return out;
  }

  std::vector<std::vector<double>> covariates;
  for (Parameter p : informed) {
    auto v = column(psa, p);
    for (double& x : v) x = to_unconstrained(p, x);
    covariates.push_back(std::move(v));
  }
  std::vector<std::span<const double>> views(covariates.begin(), covariates.end());
  const PenalizedSpline smoother(views, informed.size() == 1 ? 20 : 8);

  out.fitted.resize(psa.nb.rows(), D);
  out.basis = smoother.description();
  std::vector<double> y(psa.size());
  for (Eigen::Index d = 0; d < D; ++d) {
    for (std::size_t i = 0; i < psa.size(); ++i) y[i] = psa.nb(static_cast<Eigen::Index>(i), d);
    const SmoothFit fit = smoother.fit(y);
    if (!fit.fitted.allFinite()) throw FitError("conditional expectation fit is not finite");
    out.fitted.col(d) = fit.fitted;
    out.residual_variance.push_back(fit.residual_variance);
  }
  return out;
}

std::vector<PosteriorSummary> nested_summaries(std::span<const QuantileDataset> datasets,
                                               const PsaSample& psa, const PriorSpec& prior,
                                               const DecisionModel& model, std::size_t R,
                                               std::uint64_t seed, const McmcSettings& mcmc,
                                               unsigned threads) {
  if (psa.size() == 0) throw DomainError("empty PSA sample");
  std::vector<PosteriorSummary> out(datasets.size());
  parallel_for(
      datasets.size(),
      [&](std::size_t q) {
        PosteriorDraws post = sample_posterior(
            datasets[q].data, prior, R, rng::derive_seed(seed, rng::Stream::QuantilePosterior, q),
            mcmc);
        const auto informed = datasets[q].data.design.informed();
        for (std::size_t r = 0; r < post.draws.size(); ++r) {
          const ParameterDraw& row = psa.draws[r % psa.size()];
          std::array<double, 4> v{};
          for (std::size_t i = 0; i < v.size(); ++i) {
            const Parameter param = kAllParameters[i];
            const bool keep =
                std::find(informed.begin(), informed.end(), param) != informed.end();
            v[i] = keep ? post.draws[r].get(param) : row.get(param);
          }
          post.draws[r] = ParameterDraw::make(v[0], v[1], v[2], v[3]);
        }
        out[q] = summarize_posterior(post.draws, model);
        out[q].n_effective = datasets[q].data.n_effective;
        out[q].dataset_index = q;
      },
      threads);
  return out;
}

std::vector<double> prior_variances(const PsaSample& psa) {
  std::vector<double> out;
  for (Eigen::Index d = 0; d < psa.nb.cols(); ++d) out.push_back(column_variance(psa.nb, d));
  return out;
}

std::vector<double> variance_reduction_target(const PsaSample& psa,
                                              std::span<const PosteriorSummary> nested) {
  if (nested.empty()) throw DomainError("no nested simulations");
  const auto prior = prior_variances(psa);
  std::vector<double> target(prior.size());
  for (std::size_t d = 0; d < prior.size(); ++d) {
    double mean_post = 0.0;
    for (const auto& s : nested) mean_post += s.variance[d];
    mean_post /= static_cast<double>(nested.size());
    target[d] = std::clamp(prior[d] - mean_post, 0.0, prior[d]);
  }
  return target;
}

Eigen::MatrixXd rescale(const ConditionalExpectationFit& fit, std::span<const double> target) {
  const Eigen::MatrixXd& g = fit.fitted;
  if (static_cast<Eigen::Index>(target.size()) != g.cols())
    throw DomainError("need one variance target per treatment");
  Eigen::MatrixXd mu(g.rows(), g.cols());
  for (Eigen::Index d = 0; d < g.cols(); ++d) {
    const double t = target[static_cast<std::size_t>(d)];
    if (t < 0.0) throw DomainError("variance target must be nonnegative");
    const double mean = g.col(d).mean();
    const double var = column_variance(g, d);
    if (!(var > 0.0) || t == 0.0) {
      mu.col(d).setConstant(mean);
      continue;
    }
    const double factor = std::sqrt(t / var);
    mu.col(d) = ((g.col(d).array() - mean) * factor + mean).matrix();
  }
  return mu;
}

MmResult mm_evsi_im(const PsaSample& psa, const StudyDesign& design, const PriorSpec& prior,
                    const DecisionModel& model, const MarketShareFunction& market,
                    const CurrentShares& shares, const MmSettings& settings,
                    std::uint64_t seed) {
  const auto start = Clock::now();
  require_two_treatments(model, market);
  shares.validate(model.treatments());
  market.validate();

  MmResult out;
  const auto datasets = quantile_datasets(psa, design, settings.Q, seed);
  out.nested = nested_summaries(datasets, psa, prior, model, settings.R, seed, settings.mcmc,
                                settings.threads);
  const ConditionalExpectationFit g = fit_conditional_expectation(psa, design);
  out.target = variance_reduction_target(psa, out.nested);
  out.mu = rescale(g, out.target);

  const IncrementalPairs pairs = incremental_pairs(out.nested, market.target);
  out.fit = fit_generalized_logistic(pairs.inb, pairs.p, settings.logistic);
  out.inb = incremental(out.mu, market.target);
  out.p_target.resize(out.inb.size());
  for (std::size_t s = 0; s < out.inb.size(); ++s) out.p_target[s] = out.fit.predict(out.inb[s]);

  const ValueEstimate adjusted = assemble_evsi_im(out.mu, out.p_target, market, shares);
  const ValueEstimate plain = standard_evsi(out.mu);
  double se_adjusted = adjusted.std_error, se_plain = plain.std_error;

  if (settings.bootstrap > 0) {
    std::vector<double> reps_adjusted, reps_plain;
    for (std::size_t b = 0; b < settings.bootstrap; ++b) {
      const Replicate r = draw_replicate(psa, g, out.nested, seed, b);
      // Prior variance stays on the full PSA: it shares draws with the nested
      // variances, and resampling only one side would break that pairing.
      const Eigen::MatrixXd mu = rescale(r.g, variance_reduction_target(psa, r.nested));
      const IncrementalPairs rp = incremental_pairs(r.nested, market.target);
      LogisticFit fit;
      try {
        fit = refit_generalized_logistic(rp.inb, rp.p, {}, out.fit, settings.logistic);
      } catch (const FitError&) {
        continue;  // drop replicates whose resampled pairs cannot be fitted
      }
      const auto inb = incremental(mu, market.target);
      std::vector<double> p(inb.size());
      for (std::size_t s = 0; s < inb.size(); ++s) p[s] = fit.predict(inb[s]);
      reps_adjusted.push_back(assemble_evsi_im(mu, p, market, shares).value);
      reps_plain.push_back(standard_evsi(mu).value);
    }
    if (reps_adjusted.size() < 2) throw FitError("bootstrap replicates could not be fitted");
    se_adjusted = spread(reps_adjusted);
    se_plain = spread(reps_plain);
  }

  const double elapsed = seconds_since(start);
  out.evsi_im = {adjusted.value, se_adjusted, psa.size(), settings.R, elapsed, "mm"};
  out.evsi = {plain.value, se_plain, psa.size(), settings.R, elapsed, "mm"};
  return out;
}

namespace {

std::vector<VarianceCurveFit> variance_curves(const PsaSample& psa,
                                              std::span<const PosteriorSummary> nested,
                                              std::span<const double> sizes) {
  const auto prior_var = prior_variances(psa);
  std::vector<VarianceCurveFit> curves;
  for (std::size_t d = 0; d < prior_var.size(); ++d) {
    std::vector<double> w;
    for (const auto& s : nested) w.push_back(s.variance[d]);
    curves.push_back(fit_variance_curve(w, sizes, prior_var[d]));
  }
  return curves;
}

struct SizeEstimate {
  ValueEstimate adjusted;
  ValueEstimate plain;
};

SizeEstimate evaluate_at_size(const ConditionalExpectationFit& g,
                              std::span<const VarianceCurveFit> curves, const LogisticFit& fit,
                              const MarketShareFunction& market, const CurrentShares& shares,
                              int n) {
  std::vector<double> target;
  for (const auto& curve : curves) target.push_back(curve.reduction(n));
  const Eigen::MatrixXd mu = rescale(g, target);
  const auto inb = incremental(mu, market.target);
  std::vector<double> p(inb.size());
  for (std::size_t s = 0; s < inb.size(); ++s) p[s] = fit.predict(inb[s], n);
  return {assemble_evsi_im(mu, p, market, shares), standard_evsi(mu)};
}

}  // namespace

std::vector<int> size_sequence(const SizeRange& range, std::size_t Q, std::uint64_t seed) {
  if (range.min < 1 || range.max <= range.min)
    throw DomainError("sample-size range needs 1 <= min < max");
  const auto perm = seeded_permutation(Q, rng::derive_seed(seed, rng::Stream::Pairing, 0));
  std::vector<int> sizes(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    const double frac = static_cast<double>(perm[q]) / static_cast<double>(Q - 1);
    sizes[q] = static_cast<int>(std::lround(range.min + frac * (range.max - range.min)));
  }
  return sizes;
}

MmSizeResult mm_evsi_im_by_n(const PsaSample& psa, const StudyDesign& design,
                             const PriorSpec& prior, const DecisionModel& model,
                             const MarketShareFunction& market, const CurrentShares& shares,
                             const MmSettings& settings, const SizeRange& range,
                             std::span<const int> n_grid, std::uint64_t seed) {
  MmSizeResult out;
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  if (n_grid.empty()) return out;
  const auto start = Clock::now();
  require_two_treatments(model, market);
  shares.validate(model.treatments());
  market.validate();
  for (int n : n_grid)
    if (n < range.min || n > range.max)
      throw DomainError("n_grid values must lie inside the sample-size range");

  out.sizes = size_sequence(range, settings.Q, seed);
  const auto datasets = quantile_datasets(psa, design, settings.Q, seed, out.sizes);
  out.nested = nested_summaries(datasets, psa, prior, model, settings.R, seed, settings.mcmc,
                                settings.threads);

  std::vector<double> sizes(out.sizes.begin(), out.sizes.end());
  out.curves = variance_curves(psa, out.nested, sizes);
  const IncrementalPairs pairs = incremental_pairs(out.nested, market.target);
  out.fit = fit_generalized_logistic_n(pairs.inb, pairs.p, sizes, settings.logistic);
  const ConditionalExpectationFit g = fit_conditional_expectation(psa, design);

  // Bootstrap replicates are shared across the grid: one refit per replicate.
  std::vector<std::vector<double>> reps_adjusted(n_grid.size()), reps_plain(n_grid.size());
  for (std::size_t b = 0; b < settings.bootstrap; ++b) {
    const Replicate r = draw_replicate(psa, g, out.nested, seed, b);
    std::vector<double> rsizes;
    for (std::size_t q : r.sets) rsizes.push_back(sizes[q]);
    const IncrementalPairs rp = incremental_pairs(r.nested, market.target);
    std::vector<VarianceCurveFit> curves;
    LogisticFit fit;
    try {
      curves = variance_curves(psa, r.nested, rsizes);
      fit = refit_generalized_logistic(rp.inb, rp.p, rsizes, out.fit, settings.logistic);
    } catch (const FitError&) {
      continue;
    }
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      const auto v = evaluate_at_size(r.g, curves, fit, market, shares, n_grid[i]);
      reps_adjusted[i].push_back(v.adjusted.value);
      reps_plain[i].push_back(v.plain.value);
    }
  }
  if (settings.bootstrap > 0 && reps_adjusted.front().size() < 2)
    throw FitError("bootstrap replicates could not be fitted");
  const double setup = seconds_since(start);

  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const auto step_start = Clock::now();
    const auto v = evaluate_at_size(g, out.curves, out.fit, market, shares, n_grid[i]);
    double se_adjusted = v.adjusted.std_error, se_plain = v.plain.std_error;
    if (settings.bootstrap > 0) {
      se_adjusted = spread(reps_adjusted[i]);
      se_plain = spread(reps_plain[i]);
    }
    const double elapsed = setup + seconds_since(step_start);
    out.estimates.push_back(
        {v.adjusted.value, se_adjusted, psa.size(), settings.R, elapsed, "mm_by_n"});
    out.standard.push_back({v.plain.value, se_plain, psa.size(), settings.R, elapsed, "mm_by_n"});
  }
  return out;
}

}  // namespace voi
