#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "inl/highdim.hpp"

using namespace inl;

namespace {

constexpr double kPi = std::numbers::pi;

// Plain RK4 on dy_j/dt = 2 Lambda_j (prod y)^{1/n} with Lambda = (n/2) B2,
// stepped until the smallest (-) occupation crosses zero.
double eta_t0_by_ode(int n, int m) {
  const double eta = 1.0;
  std::vector<double> lam(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) lam[static_cast<std::size_t>(j)] = j < m ? 0.25 * eta * n / m : -0.25 * eta * n / (n - m);
  auto g = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (double v : y) s += std::log(std::max(v, 0.0));
    return std::exp(s / n);
  };
  auto add = [](const std::vector<double>& y, const std::vector<double>& k, double h) {
    std::vector<double> r(y);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += h * k[i];
    return r;
  };
  auto f = [&](const std::vector<double>& y) {
    std::vector<double> k(y.size());
    const double gg = g(y);
    for (std::size_t i = 0; i < y.size(); ++i) k[i] = 2.0 * lam[i] * gg;
    return k;
  };
  std::vector<double> y(static_cast<std::size_t>(n), 1.0 / n);
  double t = 0.0;
  const double h = 1e-4;
  for (;;) {
    const auto k1 = f(y);
    const auto k2 = f(add(y, k1, h / 2));
    const auto k3 = f(add(y, k2, h / 2));
    const auto k4 = f(add(y, k3, h));
    std::vector<double> nx(y);
    for (std::size_t i = 0; i < y.size(); ++i) nx[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    if (nx.back() <= 0.0) {
      return eta * (t + h * y.back() / (y.back() - nx.back()));
    }
    y = nx;
    t += h;
  }
}

}  // namespace

TEST_SUITE("highdim") {
  TEST_CASE("hypergeometric series against closed forms") {
    for (double z : {-0.5, 0.1, 0.5, 0.85}) {
      CHECK(hypergeometric_2f1(1, 1, 2, z) == doctest::Approx(-std::log1p(-z) / z).epsilon(1e-14));
    }
    for (double z : {0.3, 0.8, 0.95, 0.999}) {
      const double s = std::sqrt(z);
      CHECK(hypergeometric_2f1(0.5, 0.5, 1.5, z) == doctest::Approx(std::asin(s) / s).epsilon(1e-12));
    }
    CHECK(hypergeometric_2f1(1, 1, 2, 0.95) == doctest::Approx(-std::log(0.05) / 0.95).epsilon(1e-13));
    CHECK_THROWS_AS(hypergeometric_2f1(1, 1, 2, 1.0), DomainError);
  }

  TEST_CASE("connection formula agrees with the direct series") {
    for (double c : {1.3, 1.01, 1.5}) {
      const double direct = hypergeometric_2f1_series(1, 1, c, 0.95, 1e-17, 5000000);
      CHECK(hypergeometric_2f1(1, 1, c, 0.95) == doctest::Approx(direct).epsilon(1e-11));
    }
  }

  TEST_CASE("quadrature and hypergeometric termination times agree") {
    for (int n : {2, 4, 8, 16, 64, 256, 1024}) {
      for (int m : {1, n / 2}) {
        const SubspaceFilter f{n, m, 1.0};
        const auto y = DiagonalOccupation::uniform(n);
        const double q = time_of_tau(y, f, termination_tau(y, f));
        CHECK(q == doctest::Approx(termination_time_hyp(f)).epsilon(1e-10));
        if (m == n / 2) CHECK(std::abs(q - kPi / 2) < 1e-12);
      }
    }
    CHECK(termination_time_hyp({4, 1, 1.0}) == doctest::Approx(4.476078667339534).epsilon(1e-13));
    CHECK(termination_time_hyp({8, 1, 1.0}) == doctest::Approx(10.996204007052512).epsilon(1e-13));
    CHECK(termination_time_hyp({6, 2, 1.0}) == doctest::Approx(2.9928536768789944).epsilon(1e-13));
    CHECK(termination_time_hyp({4, 1, 2.0}) == doctest::Approx(4.476078667339534 / 2).epsilon(1e-13));
  }

  TEST_CASE("termination time matches a direct integration of the occupations") {
    CHECK(eta_t0_by_ode(4, 1) == doctest::Approx(termination_time_hyp({4, 1, 1.0})).epsilon(1e-4));
    CHECK(eta_t0_by_ode(6, 2) == doctest::Approx(termination_time_hyp({6, 2, 1.0})).epsilon(1e-4));
    CHECK(eta_t0_by_ode(8, 4) == doctest::Approx(kPi / 2).epsilon(1e-4));
  }

  TEST_CASE("partial times and the affine flow") {
    const SubspaceFilter f{4, 1, 1.0};
    const auto y0 = DiagonalOccupation::uniform(4);
    const double te = termination_tau(y0, f);
    CHECK(te == doctest::Approx(0.75 * 0.25));
    const auto y = highdim_flow_tau(y0, f, te / 2);
    double s = 0.0;
    for (double v : y.y) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(y.y[0] == doctest::Approx(0.25 + 4 * te / 2));
    CHECK(y.y[3] == doctest::Approx(0.25 - 4.0 / 3.0 * te / 2));
    const double half = time_of_tau(y0, f, te / 2);
    CHECK(half > 0.0);
    CHECK(half < time_of_tau(y0, f, te));
    CHECK(time_of_tau(y0, f, 0.0) == 0.0);
    CHECK_THROWS_AS(time_of_tau(y0, f, 2 * te), DomainError);
  }

  TEST_CASE("non-uniform starts") {
    const SubspaceFilter f{3, 1, 1.0};
    const DiagonalOccupation y{{0.2, 0.3, 0.5}};
    const double te = termination_tau(y, f);
    CHECK(te == doctest::Approx(2.0 / 3.0 * 0.3));
    const double t = time_of_tau(y, f, te);
    CHECK(std::isfinite(t));
    CHECK(t > 0.0);
  }

  TEST_CASE("lambda matrix and validation") {
    const auto l = lambda_matrix({4, 1, 2.0});
    CHECK(l(0, 0).real() == doctest::Approx(1.0));
    CHECK(l(3, 3).real() == doctest::Approx(-1.0 / 3.0));
    CHECK(std::abs(l.trace()) < 1e-15);
    const SubspaceFilter full{4, 4, 1.0};
    const SubspaceFilter tiny{1, 1, 1.0};
    const DiagonalOccupation over{{0.5, 0.6}};
    CHECK_THROWS_AS(full.validate(), DomainError);
    CHECK_THROWS_AS(tiny.validate(), DomainError);
    CHECK_THROWS_AS(over.validate(), DomainError);
  }

  TEST_CASE("deterministic bisection adds a quarter turn per stage") {
    for (int k = 1; k <= 4; ++k) {
      const int n = 1 << k;
      const auto r = bisection_collapse(n, 1.0, BisectionMode::Deterministic);
      CHECK(r.stages.size() == static_cast<std::size_t>(k));
      CHECK(std::abs(r.total_time - k * kPi / 2) < 1e-6);
      CHECK(r.stages.back().dim_after == 1);
    }
    const auto r2 = bisection_collapse(4, 2.0, BisectionMode::Deterministic);
    CHECK(std::abs(r2.total_time - kPi / 2) < 1e-6);
    CHECK_THROWS_AS(bisection_collapse(6, 1.0, BisectionMode::Deterministic), DomainError);
    CHECK_THROWS_AS(bisection_collapse(4, 1.0, BisectionMode::Noisy), std::invalid_argument);
  }

  TEST_CASE("noisy bisection is reproducible and thread independent") {
    const auto a = bisection_ensemble(8, 1.0, 30, 5, 1);
    const auto b = bisection_ensemble(8, 1.0, 30, 5, 3);
    CHECK(a == b);
    for (double t : a) {
      CHECK(t >= 3 * kPi / 2 - 1e-6);
      CHECK(t <= 3 * kPi + 1e-6);
    }
  }

  TEST_CASE("a single noisy stage on an unbalanced split plays the game") {
    Eigen::VectorXcd c(4);
    c << std::sqrt(0.1), std::sqrt(0.3), std::sqrt(0.3), std::sqrt(0.3);
    std::size_t multi = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
      RngStream r(6, i);
      const auto st = diagonal_stage(c, 1, 1.0, &r);
      CHECK(st.amplitudes.norm() == doctest::Approx(1.0));
      CHECK(st.t > 0.0);
      multi += st.plays > 1;
    }
    CHECK(multi > 0);
  }
}
