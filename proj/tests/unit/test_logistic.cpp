#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "voi/error.hpp"
#include "voi/logistic.hpp"
#include "voi/rng.hpp"

using namespace voi;

namespace {

double curve(double A, double B, double v, double z) { return std::pow(A + std::exp(-B * z), -v); }

}  // namespace

TEST_CASE("standard logistic is recovered from noisy data") {
  rng::Engine g(10);
  std::normal_distribution<double> e(0, 0.01);
  std::vector<double> mu, p;
  for (int q = 0; q < 50; ++q) {
    const double z = -4 + 8 * (q + 0.5) / 50;
    mu.push_back(z);
    p.push_back(std::clamp(curve(1, 1, 1, z) + e(g), 0.0, 1.0));
  }
  const auto fit = fit_generalized_logistic(mu, p);
  CHECK(fit.A >= 1.0);
  CHECK(fit.B > 0.0);
  CHECK(fit.v > 0.0);
  CHECK_FALSE(fit.u.has_value());
  CHECK(fit.converged_starts >= 1);
  double worst = 0;
  for (double z = -4; z <= 4; z += 0.01) worst = std::max(worst, std::abs(fit.predict(z) - curve(1, 1, 1, z)));
  CHECK(worst <= 0.02);
  CHECK(fit.sigma == doctest::Approx(0.01).epsilon(0.3));
}

TEST_CASE("dollar-scale inputs are standardized") {
  rng::Engine g(11);
  std::normal_distribution<double> e(0, 0.01);
  std::vector<double> mu, p;
  for (int q = 0; q < 50; ++q) {
    const double inb = -60000 + 120000 * (q + 0.5) / 50;
    mu.push_back(inb);
    p.push_back(std::clamp(curve(1.05, 1.0, 0.8, inb / 20000) + e(g), 0.0, 1.0));
  }
  const auto fit = fit_generalized_logistic(mu, p);
  CHECK(fit.standardization.scale > 1000);
  for (double inb = -60000; inb <= 60000; inb += 1000)
    CHECK(std::abs(fit.predict(inb) - curve(1.05, 1.0, 0.8, inb / 20000)) < 0.03);
}

TEST_CASE("flat probabilities symmetric about zero predict one half at zero") {
  rng::Engine g(12);
  std::normal_distribution<double> e(0, 1e-4);
  std::vector<double> mu, p;
  for (int q = 0; q < 40; ++q) {
    mu.push_back(-1 + 2 * (q + 0.5) / 40);
    p.push_back(0.5 + e(g));
  }
  const auto fit = fit_generalized_logistic(mu, p);
  CHECK(fit.predict(0.0) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("predictions are probabilities and monotone") {
  std::vector<double> mu, p;
  for (int q = 0; q < 30; ++q) {
    mu.push_back(q - 15.0);
    p.push_back(curve(1.2, 0.7, 2.0, (q - 15.0) / 5));
  }
  const auto fit = fit_generalized_logistic(mu, p);
  double last = 0;
  for (double x = -1e4; x <= 1e4; x += 0.5) {
    const double h = fit.predict(x);
    CHECK(h > 0.0);
    CHECK(h <= 1.0);
    CHECK(h >= last);
    last = h;
  }
  CHECK(fit.predict(1e9) == doctest::Approx(std::pow(fit.A, -fit.v)));
  CHECK(fit.predict(-1e9) > 0.0);
}

TEST_CASE("sample-size exponent is recovered") {
  for (double u : {0.0, 0.5}) {
    CAPTURE(u);
    rng::Engine g(13);
    std::normal_distribution<double> e(0, 0.01);
    std::vector<double> mu, p, n;
    for (int q = 0; q < 50; ++q) {
      const double z = -3 + 6 * ((q * 37) % 50 + 0.5) / 50;
      const double size = 10 + 190.0 * q / 49;
      mu.push_back(z);
      n.push_back(size);
      p.push_back(std::clamp(curve(1, 1, 1, std::pow(size / 50.0, u) * z) + e(g), 0.0, 1.0));
    }
    const auto fit = fit_generalized_logistic_n(mu, p, n);
    REQUIRE(fit.u.has_value());
    CHECK(std::abs(*fit.u - u) <= (u == 0.0 ? 0.1 : 0.15));
    if (*fit.u > 0 && fit.B > 0) CHECK(fit.predict(1.0, 200) >= fit.predict(1.0, 20));
  }
}

TEST_CASE("too few points") {
  const std::vector<double> mu{0, 1, 2}, p{0.2, 0.5, 0.8};
  CHECK_THROWS_AS(fit_generalized_logistic(mu, p), FitError);
  const std::vector<double> mu4{0, 1, 2, 3}, p4{0.2, 0.5, 0.8, 0.9}, n4{10, 20, 30, 40};
  CHECK_THROWS_AS(fit_generalized_logistic_n(mu4, p4, n4), FitError);
}
