#include "voi/implementation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voi/error.hpp"

namespace voi {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double row_mean(const Eigen::MatrixXd& mu, Eigen::Index d) {
  double sum = 0.0;
  for (Eigen::Index s = 0; s < mu.rows(); ++s) sum += mu(s, d);
  return sum / static_cast<double>(mu.rows());
}

// Standard error of mean(psi) where psi_s is the per-row influence.
double influence_se(const std::vector<double>& psi) {
  const auto n = static_cast<double>(psi.size());
  if (psi.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : psi) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : psi) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

void MarketShareFunction::validate() const {
  if (const auto* t = std::get_if<ThresholdLinear>(&kind)) {
    if (!(t->threshold >= 0.0 && t->threshold < t->saturation_at && t->saturation_at <= 1.0))
      throw DomainError("threshold_linear needs 0 <= threshold < saturation_at <= 1");
  } else if (const auto* b = std::get_if<BreakpointTable>(&kind)) {
    if (b->points.empty()) throw DomainError("breakpoint table is empty");
    for (std::size_t i = 0; i < b->points.size(); ++i) {
      const auto [p, m] = b->points[i];
      if (p < 0.0 || p > 1.0 || m < 0.0 || m > 1.0)
        throw DomainError("breakpoints must lie in [0,1] x [0,1]");
      if (i > 0 && (p <= b->points[i - 1].first || m < b->points[i - 1].second))
        throw DomainError("breakpoints must be strictly increasing in p and nondecreasing in share");
    }
  }
}

void CurrentShares::validate(std::size_t treatments) const {
  if (m.size() != treatments) throw DomainError("one current share is required per treatment");
  double total = 0.0;
  for (double v : m) {
    if (v < 0.0 || v > 1.0) throw DomainError("current shares must lie in [0,1]");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("current shares must sum to 1");
}

double target_share(const MarketShareFunction& fn, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "probability " << p << " outside [0,1]";
    throw DomainError(os.str());
  }
  if (const auto* t = std::get_if<ThresholdLinear>(&fn.kind)) {
    if (p <= t->threshold) return 0.0;
    return clamp01((p - t->threshold) / (t->saturation_at - t->threshold));
  }
  if (const auto* b = std::get_if<BreakpointTable>(&fn.kind)) {
    const auto& pts = b->points;
    if (p <= pts.front().first) return pts.front().second;
    if (p >= pts.back().first) return pts.back().second;
    const auto hi = std::upper_bound(pts.begin(), pts.end(), p,
                                     [](double v, const auto& pt) { return v < pt.first; });
    const auto lo = hi - 1;
    const double w = (p - lo->first) / (hi->first - lo->first);
    return clamp01(lo->second + w * (hi->second - lo->second));
  }
  throw DomainError("step_at_argmax shares depend on expected net benefits, not p");
}

std::vector<double> market_share(const MarketShareFunction& fn, double p) {
  if (fn.target > 1) throw DomainError("probability-driven shares need two treatments");
  const double share = target_share(fn, p);
  std::vector<double> m(2);
  m[fn.target] = share;
  m[1 - fn.target] = 1.0 - share;
  return m;
}

void market_share_row(const MarketShareFunction& fn, std::span<const double> mu,
                      double p_target, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (!fn.uses_probability()) {
    out[argmax(mu)] = 1.0;
    return;
  }
  if (out.size() != 2) throw DomainError("probability-driven shares need two treatments");
  const double share = target_share(fn, p_target);
  out[fn.target] = share;
  out[1 - fn.target] = 1.0 - share;
}

double current_decision_value(const PsaSample& psa, const CurrentShares& shares) {
  shares.validate(static_cast<std::size_t>(psa.nb.cols()));
  const auto means = expected_nb(psa);
  double value = 0.0;
  for (std::size_t d = 0; d < means.size(); ++d) value += shares.m[d] * means[d];
  return value;
}

ValueEstimate assemble_evsi_im(const Eigen::MatrixXd& mu, std::span<const double> p_target,
                               const MarketShareFunction& fn, const CurrentShares& shares) {
  const auto S = static_cast<std::size_t>(mu.rows());
  const auto D = static_cast<std::size_t>(mu.cols());
  if (S == 0) throw DomainError("no datasets to assemble");
  if (fn.uses_probability() && p_target.size() != S)
    throw DomainError("p_target length does not match the number of datasets");
  fn.validate();
  shares.validate(D);

  std::vector<double> row(D), m(D), adjusted(S);
  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t d = 0; d < D; ++d)
      row[d] = mu(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d));
    market_share_row(fn, row, fn.uses_probability() ? p_target[s] : 0.0, m);
    double value = 0.0;
    for (std::size_t d = 0; d < D; ++d) value += m[d] * row[d];
    adjusted[s] = value;
    total += value;
  }
  double current = 0.0;
  for (std::size_t d = 0; d < D; ++d)
    current += shares.m[d] * row_mean(mu, static_cast<Eigen::Index>(d));

  std::vector<double> psi(S);
  for (std::size_t s = 0; s < S; ++s) {
    double base = 0.0;
    for (std::size_t d = 0; d < D; ++d)
      base += shares.m[d] * mu(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d));
    psi[s] = adjusted[s] - base;
  }
  return {total / static_cast<double>(S) - current, influence_se(psi)};
}

ValueEstimate standard_evsi(const Eigen::MatrixXd& mu) {
  const auto S = static_cast<std::size_t>(mu.rows());
  const auto D = static_cast<std::size_t>(mu.cols());
  if (S == 0) throw DomainError("no datasets");
  std::vector<double> row(D), means(D), best(S);
  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t d = 0; d < D; ++d)
      row[d] = mu(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d));
    best[s] = row[argmax(row)];
    total += best[s];
  }
  for (std::size_t d = 0; d < D; ++d) means[d] = row_mean(mu, static_cast<Eigen::Index>(d));
  const std::size_t current = argmax(means);

  std::vector<double> psi(S);
  for (std::size_t s = 0; s < S; ++s)
    psi[s] = best[s] - mu(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(current));
  return {total / static_cast<double>(S) - means[current], influence_se(psi)};
}

}  // namespace voi
