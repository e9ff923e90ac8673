#include <cmath>
#include <vector>

#include "doctest.h"
#include "hazmatch/propensity.hpp"
#include "hazmatch/rng.hpp"
#include "oracles.hpp"

using namespace hazmatch;

namespace {

Dataset toy_dataset(const std::vector<double>& x, const std::vector<int>& w) {
  std::vector<Subject> subjects;
  for (std::size_t i = 0; i < x.size(); ++i) {
    subjects.push_back({static_cast<int>(i), {x[i]}, w[i], 1.0 + static_cast<double>(i), 1});
  }
  return Dataset(subjects);
}

double bernoulli_loglik(const Dataset& ds, double t0, double t1) {
  double ll = 0;
  for (int i = 0; i < ds.size(); ++i) {
    const double eta = t0 + t1 * ds[i].x[0];
    ll += ds[i].w * eta - std::log1p(std::exp(eta) == HUGE_VAL ? 1e300 : std::exp(eta));
  }
  return ll;
}

}  // namespace

TEST_CASE("symmetric data gives theta = 0") {
  const Dataset ds = toy_dataset({1, 1, -1, -1}, {1, 0, 1, 0});
  const PropensityFit fit = fit_logistic(ds);
  CHECK(fit.converged);
  CHECK(std::abs(fit.theta[0]) < 1e-9);
  CHECK(std::abs(fit.theta[1]) < 1e-9);
  for (double s : fit.scores) CHECK(s == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("MLE matches a refined grid search on 8 hand-coded subjects") {
  const Dataset ds =
      toy_dataset({-1.2, -0.4, 0.1, 0.5, 0.9, 1.4, 2.0, 2.6}, {0, 0, 1, 0, 1, 1, 0, 1});
  const PropensityFit fit = fit_logistic(ds);

  // three-stage grid refinement reaching the 1e-3 resolution of a dense
  // grid over [-5,5]^2; valid because the Bernoulli log-likelihood is concave
  double best0 = 0, best1 = 0;
  double step = 0.1;
  double lo0 = -5, hi0 = 5, lo1 = -5, hi1 = 5;
  for (int stage = 0; stage < 3; ++stage) {
    double best = -1e300;
    for (double t0 = lo0; t0 <= hi0 + 1e-12; t0 += step) {
      for (double t1 = lo1; t1 <= hi1 + 1e-12; t1 += step) {
        const double ll = bernoulli_loglik(ds, t0, t1);
        if (ll > best) {
          best = ll;
          best0 = t0;
          best1 = t1;
        }
      }
    }
    lo0 = best0 - 1.5 * step;
    hi0 = best0 + 1.5 * step;
    lo1 = best1 - 1.5 * step;
    hi1 = best1 + 1.5 * step;
    step /= 10;
  }
  CHECK(std::abs(fit.theta[0] - best0) <= 2e-3);
  CHECK(std::abs(fit.theta[1] - best1) <= 2e-3);
}

TEST_CASE("perfect separation is detected") {
  const Dataset ds = toy_dataset({-2, -1, -0.5, 0.5, 1, 2}, {0, 0, 0, 1, 1, 1});
  CHECK_THROWS_AS(fit_logistic(ds), std::runtime_error);
}

TEST_CASE("rank-deficient design is rejected") {
  // two identical covariate columns
  std::vector<Subject> subjects;
  RngStream rng(3);
  for (int i = 0; i < 20; ++i) {
    const double x = rng.uniform(-1, 1);
    subjects.push_back({i, {x, x}, i % 2, 1.0, 1});
  }
  CHECK_THROWS_AS(fit_logistic(Dataset(subjects)), std::invalid_argument);
}

TEST_CASE("refit with the original treatments reproduces the fit") {
  RngStream rng(8);
  std::vector<double> x;
  std::vector<int> w;
  for (int i = 0; i < 60; ++i) {
    x.push_back(rng.uniform(-2, 2));
    w.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-0.3 - 0.8 * x.back()))));
  }
  const Dataset ds = toy_dataset(x, w);
  const PropensityFit fit = fit_logistic(ds);
  const PropensityFit refit = refit_on_bootstrap_treatments(ds, w);
  CHECK(refit.theta[0] == doctest::Approx(fit.theta[0]).epsilon(1e-12));
  CHECK(refit.theta[1] == doctest::Approx(fit.theta[1]).epsilon(1e-12));
}

TEST_CASE("refit with a degenerate treatment draw errors") {
  const Dataset ds = toy_dataset({1, 2, 3, 4}, {1, 0, 1, 0});
  CHECK_THROWS_AS(refit_on_bootstrap_treatments(ds, {1, 1, 1, 1}), std::runtime_error);
}

TEST_CASE("bootstrap refits concentrate at the MLE rate") {
  // Balanced x = +/-3 design: the asymptotic sds are 2/sqrt(n) for the
  // intercept and 0.67/sqrt(n) for the slope, so |theta* - theta|_inf <=
  // 4/sqrt(n) holds with probability ~0.954; we assert >= 0.935, three
  // Monte Carlo standard errors below that level.
  const int n = 2000;
  std::vector<double> x;
  std::vector<int> w;
  RngStream rng(77);
  for (int i = 0; i < n; ++i) {
    x.push_back(i % 2 == 0 ? 3.0 : -3.0);
    w.push_back(rng.bernoulli(0.5));
  }
  const Dataset ds = toy_dataset(x, w);
  const PropensityFit fit = fit_logistic(ds);

  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  int within = 0;
  const int draws = 1000;
  for (int b = 0; b < draws; ++b) {
    std::vector<int> w_star(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      w_star[static_cast<std::size_t>(i)] = rng.bernoulli(fit.scores[static_cast<std::size_t>(i)]);
    }
    PropensityFit star;
    try {
      star = refit_on_bootstrap_treatments(ds, w_star);
    } catch (const std::exception&) {
      continue;
    }
    if ((star.theta - fit.theta).lpNorm<Eigen::Infinity>() <= bound) ++within;
  }
  CHECK(static_cast<double>(within) / draws >= 0.935);
}

TEST_CASE("score gradient matches hand arithmetic and sums to zero at the MLE") {
  // hand case: theta = (0.3, -0.2), x = 1.5 -> eta = 0, e = 0.5
  PropensityFit fit;
  fit.theta = Eigen::Vector2d(0.3, -0.2);
  fit.design = DesignSpec{};
  Subject s{0, {1.5}, 1, 1.0, 1};
  const Eigen::VectorXd g = score_gradient(fit, s);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(0.75).epsilon(1e-12));
  s.w = 0;
  const Eigen::VectorXd g0 = score_gradient(fit, s);
  CHECK(g0[0] == doctest::Approx(-0.5).epsilon(1e-12));

  RngStream rng(21);
  std::vector<double> x;
  std::vector<int> w;
  for (int i = 0; i < 80; ++i) {
    x.push_back(rng.uniform(-2, 2));
    w.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(0.4 - x.back()))));
  }
  const Dataset ds = toy_dataset(x, w);
  const PropensityFit mle = fit_logistic(ds);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < ds.size(); ++i) total += score_gradient(mle, ds[i]);
  CHECK(total.lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("fisher information equals the negative log-likelihood Hessian") {
  RngStream rng(4);
  std::vector<double> x;
  std::vector<int> w;
  for (int i = 0; i < 50; ++i) {
    x.push_back(rng.uniform(-1.5, 1.5));
    w.push_back(rng.bernoulli(0.4));
  }
  const Dataset ds = toy_dataset(x, w);
  const PropensityFit fit = fit_logistic(ds);

  const double h = 1e-4;  // second differences need a larger step than first
  const auto ll = [&](double t0, double t1) { return bernoulli_loglik(ds, t0, t1); };
  const double t0 = fit.theta[0], t1 = fit.theta[1];
  const double h00 = (ll(t0 + h, t1) - 2 * ll(t0, t1) + ll(t0 - h, t1)) / (h * h);
  const double h11 = (ll(t0, t1 + h) - 2 * ll(t0, t1) + ll(t0, t1 - h)) / (h * h);
  const double h01 = (ll(t0 + h, t1 + h) - ll(t0 + h, t1 - h) - ll(t0 - h, t1 + h) +
                      ll(t0 - h, t1 - h)) /
                     (4 * h * h);
  CHECK(fit.fisher_info(0, 0) == doctest::Approx(-h00).epsilon(1e-5));
  CHECK(fit.fisher_info(1, 1) == doctest::Approx(-h11).epsilon(1e-5));
  CHECK(fit.fisher_info(0, 1) == doctest::Approx(-h01).epsilon(1e-4));
}

TEST_CASE("fitted scores are invariant to affine covariate rescaling") {
  RngStream rng(14);
  std::vector<double> x;
  std::vector<int> w;
  for (int i = 0; i < 70; ++i) {
    x.push_back(rng.uniform(0, 4));
    w.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(1.0 - 0.6 * x.back()))));
  }
  const Dataset a = toy_dataset(x, w);
  std::vector<double> xs;
  for (double v : x) xs.push_back(5.0 * v - 2.0);
  const Dataset b = toy_dataset(xs, w);
  const PropensityFit fa = fit_logistic(a);
  const PropensityFit fb = fit_logistic(b);
  for (std::size_t i = 0; i < fa.scores.size(); ++i) {
    CHECK(std::abs(fa.scores[i] - fb.scores[i]) <= 1e-8);
  }
}

TEST_CASE("sqrt design transform changes the linear predictor") {
  RngStream rng(2);
  std::vector<Subject> subjects;
  for (int i = 0; i < 40; ++i) {
    subjects.push_back({i, {rng.exponential(1.0), rng.exponential(1.0)}, i % 2, 1.0, 1});
  }
  const Dataset ds(subjects);
  DesignSpec sqrt_design;
  sqrt_design.powers = {0.5, 0.5};
  const Eigen::MatrixXd m = sqrt_design.build(ds);
  CHECK(m(3, 1) == doctest::Approx(std::sqrt(ds[3].x[0])).epsilon(1e-14));
  CHECK(m(3, 0) == 1.0);
}
