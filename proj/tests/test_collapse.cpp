#include <doctest.h>

#include <cmath>
#include <numbers>

#include "inl/collapse.hpp"
#include "inl/competition.hpp"
#include "inl/sampling.hpp"

using namespace inl;

namespace {

constexpr double kPi = std::numbers::pi;

BipartiteState alpha_state(double alpha) {
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 0) = std::sqrt(alpha);
  c(1, 1) = std::sqrt(1.0 - alpha);
  return BipartiteState(c);
}

// Diagonal canonical flow: a' = (eta/2) b, b' = -(eta/2) a.
double y0_oracle(double alpha, double eta, double t) {
  const double a = std::sqrt(alpha) * std::cos(0.5 * eta * t) + std::sqrt(1.0 - alpha) * std::sin(0.5 * eta * t);
  return a * a;
}

RngStream stream_with_first_sign(int want) {
  for (std::uint64_t i = 0;; ++i) {
    RngStream r(99, i);
    RngStream probe = r;
    if (probe.sign() == want) return r;
  }
}

}  // namespace

TEST_SUITE("collapse") {
  TEST_CASE("closed form fortunes agree with the rotation oracle") {
    for (double alpha : {0.1, 0.25, 0.5, 0.75}) {
      const double t0 = termination_time(alpha, 1.3);
      for (int k = 0; k <= 20; ++k) {
        const double t = t0 * k / 20.0;
        const auto [y0, y1] = analytic_y(alpha, 1.3, t);
        CHECK(std::abs(y0 - y0_oracle(alpha, 1.3, t)) < 1e-14);
        CHECK(std::abs(y0 + y1 - 1.0) < 1e-14);
      }
      CHECK(y0_oracle(alpha, 1.3, t0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(termination_time(0.5, 1.0) == doctest::Approx(kPi / 2.0));
    CHECK(termination_time(0.5, 1.0, -1) == doctest::Approx(kPi / 2.0));
    CHECK(termination_time(0.25, 1.0, -1) == doctest::Approx(kPi / 3.0));
  }

  TEST_CASE("deterministic flow matches the closed form on a grid") {
    for (double alpha : {0.1, 0.25, 0.5, 0.75}) {
      const double t0 = termination_time(alpha, 1.0);
      CollapseOptions o;
      for (int k = 0; k < 100; ++k) o.output_times.push_back(t0 * k / 100.0);
      const auto tr = flow_deterministic(alpha_state(alpha), MeasurementOperator::canonical(1.0), 1, o);
      REQUIRE(tr.termination_time.has_value());
      CHECK(std::abs(*tr.termination_time - t0) < 1e-6);
      CHECK(tr.outcome == 0);
      double dev = 0.0;
      for (const auto& s : tr.samples) {
        if (s.t <= t0) dev = std::max(dev, std::abs(std::norm(s.c(0, 0)) - y0_oracle(alpha, 1.0, s.t)));
      }
      CHECK(dev < 1e-8);
    }
  }

  TEST_CASE("negative sign and negative eta") {
    const auto tr = flow_deterministic(alpha_state(0.25), MeasurementOperator::canonical(1.0), -1);
    CHECK(std::abs(*tr.termination_time - kPi / 3.0) < 1e-6);
    CHECK(tr.outcome == 1);
    const auto neg = flow_deterministic(alpha_state(0.25), MeasurementOperator::canonical(-2.0), 1);
    // |eta| = 2 halves the time of the eta = 1 flow from the same state.
    CHECK(std::abs(*neg.termination_time - termination_time(0.25, 2.0)) < 1e-6);
  }

  TEST_CASE("second derivatives at termination") {
    // y0'' -> -eta^2/2 and |C00|'' -> -(eta/2)^2 from the left.
    const double eta = 1.0;
    const double alpha = 0.3;
    const double t0 = termination_time(alpha, eta);
    const double h = 1e-3;
    CollapseOptions o;
    o.output_times = {t0 - 3 * h, t0 - 2 * h, t0 - h};
    const auto tr = flow_deterministic(alpha_state(alpha), MeasurementOperator::canonical(eta), 1, o);
    std::vector<double> y;
    std::vector<double> a;
    for (const auto& s : tr.samples) {
      if (s.t > 0.0 && s.t < t0 - h / 2) {
        y.push_back(std::norm(s.c(0, 0)));
        a.push_back(std::abs(s.c(0, 0)));
      }
    }
    REQUIRE(y.size() == 3);
    CHECK((y[0] - 2 * y[1] + y[2]) / (h * h) == doctest::Approx(-eta * eta / 2.0).epsilon(1e-3));
    CHECK((a[0] - 2 * a[1] + a[2]) / (h * h) == doctest::Approx(-(eta / 2) * (eta / 2)).epsilon(1e-3));
  }

  TEST_CASE("norm is conserved by the modified right-hand side") {
    RngStream rng(3, 0);
    for (int i = 0; i < 50; ++i) {
      const auto s = random_state(3, rng);
      const CMatrix l = random_hermitian(3, rng);
      const CMatrix l0 = l - (l.trace() / 3.0) * CMatrix::Identity(3, 3);
      const auto m = MeasurementOperator::one_sided(l0, 1.0);
      HamiltonianPair h{random_hermitian(3, rng), random_hermitian(3, rng)};
      const CMatrix d = rhs_modified(s, m, h);
      CHECK(std::abs((s.matrix().adjoint() * d).trace().real()) < 1e-12);
    }
  }

  TEST_CASE("spin coupling reproduces the competition right-hand side") {
    const cplx c00(0.6, 0.1);
    const cplx c11(0.3, -0.7);
    CMatrix c = CMatrix::Zero(2, 2);
    c(0, 0) = c00;
    c(1, 1) = c11;
    const auto r = TwoBodyCoupling::spin_spin(0.8);
    const CMatrix d = rhs_modified(c, MeasurementOperator::canonical(1.7), HamiltonianPair::zero(2), &r);
    const auto [d0, d1] = coupled_rhs(c00, c11, 1.7, 0.8);
    CHECK(std::abs(d(0, 0) - d0) < 1e-14);
    CHECK(std::abs(d(1, 1) - d1) < 1e-14);
  }

  TEST_CASE("measurement operator validation") {
    CHECK_THROWS_AS(MeasurementOperator::one_sided(CMatrix::Identity(2, 2), 1.0).validate(), std::invalid_argument);
    CMatrix nh = CMatrix::Zero(2, 2);
    nh(0, 1) = 1.0;
    CHECK_THROWS_AS(MeasurementOperator::one_sided(nh, 1.0).validate(), std::invalid_argument);
    CHECK_NOTHROW(MeasurementOperator::canonical(2.0).validate());
    CHECK_THROWS_AS(flow_deterministic(alpha_state(0.5), MeasurementOperator::canonical(0.0), 1), DomainError);
  }

  TEST_CASE("transfer step is the Euler step and converges at first order") {
    RngStream rng(4, 0);
    const auto m = MeasurementOperator::canonical(1.0);
    const auto s = random_state(2, rng);
    CHECK((transfer_step(s.matrix(), m, 1e-3) - euler_step(s.matrix(), m, 1e-3)).cwiseAbs().maxCoeff() < 1e-15);

    const double alpha = 0.3;
    const double t_end = 0.5;
    auto err = [&](int steps) {
      CMatrix c = alpha_state(alpha).matrix();
      const double dt = t_end / steps;
      for (int k = 0; k < steps; ++k) c = transfer_step(c, m, dt);
      return std::abs(std::norm(c(0, 0)) - y0_oracle(alpha, 1.0, t_end));
    };
    CHECK(err(200) / err(400) == doctest::Approx(2.0).epsilon(0.02));
  }

  TEST_CASE("transfer matrix covariance Z(ACB) = A Z(C) A^dagger") {
    RngStream rng(5, 0);
    for (int i = 0; i < 20; ++i) {
      const CMatrix c = random_state(2, rng).matrix();
      const CMatrix a = haar_unitary(2, rng);
      const CMatrix b = haar_unitary(2, rng);
      const CMatrix l = MeasurementOperator::canonical(1.0).lambda1;
      const CMatrix lhs = transfer_Z(a * c * b, a * l * a.adjoint(), 0.01);
      const CMatrix rhs = a * transfer_Z(c, l, 0.01) * a.adjoint();
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("interaction picture and cell split") {
    HamiltonianPair h{CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
    h.h1(0, 0) = 1.0;
    h.h1(1, 1) = -1.0;
    const auto s = alpha_state(0.5);
    const auto r = to_interaction_picture(s, h, 0.3);
    CHECK(std::abs(r(0, 0) - std::polar(std::sqrt(0.5), -0.3)) < 1e-14);
    CHECK(std::abs(r(1, 1) - std::polar(std::sqrt(0.5), 0.3)) < 1e-14);
    const CMatrix c = (CMatrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished();
    const auto cs = cell_split(c);
    CHECK(cs.weight_diagonal == doctest::Approx(0.5));
    CHECK(cs.weight_anti_diagonal == doctest::Approx(0.5));
  }

  TEST_CASE("a single play doubles or loses the smaller fortune") {
    const auto m = MeasurementOperator::canonical(1.0);
    auto up = stream_with_first_sign(1);
    const auto win = play(alpha_state(0.25), m, up);
    CHECK_FALSE(win.terminal);
    CHECK(win.record.stake == doctest::Approx(0.25));
    CHECK(fortunes(win.segment.final_state, m).first == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(win.record.t_end == doctest::Approx(kPi / 6.0).epsilon(1e-8));

    auto down = stream_with_first_sign(-1);
    const auto loss = play(alpha_state(0.25), m, down);
    CHECK(loss.terminal);
    CHECK(loss.segment.outcome == 1);
    CHECK(loss.record.t_end == doctest::Approx(kPi / 3.0).epsilon(1e-7));
  }

  TEST_CASE("collapse ends on a normalized product state") {
    const auto m = MeasurementOperator::canonical(1.0);
    for (std::uint64_t i = 0; i < 20; ++i) {
      RngStream r(8, i);
      const auto tr = collapse(alpha_state(0.3), m, r);
      REQUIRE(tr.outcome.has_value());
      CHECK(std::abs(tr.final_state.determinant()) < 1e-14);
      CHECK(tr.final_state.squaredNorm() == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(tr.plays.size() >= 1);
      CHECK(tr.tau == doctest::Approx(tr.plays.back().tau_end));
    }
  }

  TEST_CASE("general-dimension path collapses") {
    CMatrix l = CMatrix::Zero(3, 3);
    l(0, 0) = 1.0;
    l(1, 1) = -0.5;
    l(2, 2) = -0.5;
    const auto m = MeasurementOperator::one_sided(0.5 * l, 1.0);
    RngStream rng(9, 0);
    const auto s = random_state(3, rng);
    for (std::uint64_t i = 0; i < 5; ++i) {
      RngStream r(9, i + 1);
      const auto tr = collapse(s, m, r);
      REQUIRE(tr.outcome.has_value());
      CHECK(det_measure(tr.final_state) < 1e-12);
    }
  }

  TEST_CASE("a unitary on particle 2 leaves the deterministic flow time unchanged") {
    RngStream rng(10, 0);
    const auto m = MeasurementOperator::canonical(1.0);
    const auto s = alpha_state(0.3);
    const auto u = haar_unitary(2, rng);
    const auto t1 = flow_deterministic(s, m, 1);
    const auto t2 = flow_deterministic(apply_local(CMatrix::Identity(2, 2), s, u), m, 1);
    CHECK(std::abs(*t1.termination_time - *t2.termination_time) < 1e-9);
    CHECK(t1.outcome == t2.outcome);
  }

  TEST_CASE("ensembles are independent of the thread count") {
    const auto m = MeasurementOperator::canonical(1.0);
    EnsembleOptions a;
    a.threads = 1;
    EnsembleOptions b;
    b.threads = 3;
    const auto r1 = run_ensemble(alpha_state(0.2), m, 60, 4, a);
    const auto r2 = run_ensemble(alpha_state(0.2), m, 60, 4, b);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      CHECK(r1[i].outcome == r2[i].outcome);
      CHECK(r1[i].termination_time == r2[i].termination_time);
      CHECK(r1[i].plays == r2[i].plays);
    }
    const auto st = summarize_ensemble(r1, 2);
    CHECK(st.outcome_counts[0] + st.outcome_counts[1] == 60);
  }

  TEST_CASE("an already factorized state terminates immediately") {
    CMatrix c = CMatrix::Zero(2, 2);
    c(0, 0) = 1.0;
    RngStream r(1, 0);
    const auto tr = collapse(BipartiteState(c), MeasurementOperator::canonical(1.0), r);
    CHECK(tr.termination_time == 0.0);
    CHECK(tr.outcome == 0);
    CHECK(tr.plays.empty());
  }
}
