#include "voi/nmc.hpp"

#include "voi/error.hpp"
#include "voi/parallel.hpp"

namespace voi {

PosteriorSummary summarize_posterior(std::span<const ParameterDraw> draws,
                                     const DecisionModel& model) {
  const std::size_t D = model.treatments();
  const std::size_t R = draws.size();
  if (R < 2) throw DomainError("need at least two posterior draws");

  // Welford accumulation keeps the variance accurate at dollar scale.
  std::vector<double> mean(D, 0.0), m2(D, 0.0), nb(D);
  std::vector<std::size_t> wins(D, 0);
  for (std::size_t r = 0; r < R; ++r) {
    model.evaluate(draws[r], nb);
    ++wins[argmax(nb)];
    const double k = static_cast<double>(r + 1);
    for (std::size_t d = 0; d < D; ++d) {
      const double delta = nb[d] - mean[d];
      mean[d] += delta / k;
      m2[d] += delta * (nb[d] - mean[d]);
    }
  }
  PosteriorSummary out;
  out.mu = mean;
  out.p.resize(D);
  out.variance.resize(D);
  double assigned = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    out.variance[d] = m2[d] / static_cast<double>(R - 1);
    if (d + 1 < D) {
      out.p[d] = static_cast<double>(wins[d]) / static_cast<double>(R);
      assigned += out.p[d];
    }
  }
  out.p[D - 1] = 1.0 - assigned;
  return out;
}

std::vector<PosteriorSummary> nmc_summaries(const StudyDesign& design, const PriorSpec& prior,
                                            const DecisionModel& model, std::size_t S,
                                            std::size_t R, std::uint64_t seed,
                                            const McmcSettings& mcmc, unsigned threads) {
  if (S < 2) throw DomainError("outer sample size S must be at least 2");
  if (R < 2) throw DomainError("inner sample size R must be at least 2");
  design.validate();
  prior.validate();

  std::vector<PosteriorSummary> out(S);
  const PriorSampler prototype(prior);
  parallel_for(
      S,
      [&](std::size_t s) {
        PriorSampler sampler = prototype;
        auto engine = rng::make_engine(seed, rng::Stream::Outer, s);
        const ParameterDraw theta = sampler.draw(engine);
        const Dataset data =
            simulate_dataset(design, theta, rng::derive_seed(seed, rng::Stream::Dataset, s));
        const PosteriorDraws post = sample_posterior(
            data, prior, R, rng::derive_seed(seed, rng::Stream::Posterior, s), mcmc);
        out[s] = summarize_posterior(post.draws, model);
        out[s].n_effective = data.n_effective;
        out[s].dataset_index = s;
      },
      threads);
  return out;
}

Eigen::MatrixXd summary_means(std::span<const PosteriorSummary> summaries) {
  if (summaries.empty()) throw DomainError("no posterior summaries");
  const auto D = static_cast<Eigen::Index>(summaries.front().mu.size());
  Eigen::MatrixXd mu(static_cast<Eigen::Index>(summaries.size()), D);
  for (std::size_t s = 0; s < summaries.size(); ++s)
    for (Eigen::Index d = 0; d < D; ++d)
      mu(static_cast<Eigen::Index>(s), d) = summaries[s].mu[static_cast<std::size_t>(d)];
  return mu;
}

EvsiEstimate nmc_evsi(std::span<const PosteriorSummary> summaries) {
  const ValueEstimate v = standard_evsi(summary_means(summaries));
  EvsiEstimate e;
  e.value = v.value;
  e.std_error = v.std_error;
  e.S = summaries.size();
  e.method = "nmc";
  return e;
}

EvsiEstimate nmc_evsi_im(std::span<const PosteriorSummary> summaries,
                         const MarketShareFunction& market, const CurrentShares& shares) {
  const Eigen::MatrixXd mu = summary_means(summaries);
  std::vector<double> p_target(summaries.size());
  if (market.uses_probability()) {
    if (market.target >= static_cast<std::size_t>(mu.cols()))
      throw DomainError("market-share target index out of range");
    for (std::size_t s = 0; s < summaries.size(); ++s) p_target[s] = summaries[s].p[market.target];
  }
  const ValueEstimate v = assemble_evsi_im(mu, p_target, market, shares);
  EvsiEstimate e;
  e.value = v.value;
  e.std_error = v.std_error;
  e.S = summaries.size();
  e.method = "nmc";
  return e;
}

}  // namespace voi
