#include "inl/competition.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "inl/flow.hpp"

namespace inl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;
// Polar angle at which the flow switches to the regularized variables.
constexpr double kPoleSwitch = 1e-2;
constexpr double kLStep = 1e-2;
constexpr double kLCap = 700.0;
constexpr double kPhaseConverged = 1e-12;
constexpr double kInvariantMargin = 1e-6;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

BlochPoint to_bloch(cplx c00, cplx c11) {
  return {2.0 * std::atan2(std::abs(c11), std::abs(c00)), std::arg(c11) - std::arg(c00)};
}

std::pair<cplx, cplx> from_bloch(const BlochPoint& p) {
  return {cplx(std::cos(0.5 * p.theta)), std::polar(std::sin(0.5 * p.theta), p.phi)};
}

std::pair<cplx, cplx> coupled_rhs(cplx c00, cplx c11, double eta, double gamma) {
  if (c00 == cplx(0.0) || c11 == cplx(0.0)) {
    throw DomainError("coupled_rhs: zero amplitude");
  }
  const double d = std::abs(c00 * c11);
  const cplx ig(0.0, 0.5 * gamma);
  return {0.5 * eta * d / std::conj(c00) + ig * c11, -0.5 * eta * d / std::conj(c11) + ig * c00};
}

std::pair<double, double> polar_rhs(const BlochPoint& p, double eta) {
  const double s = std::sin(p.theta);
  if (s == 0.0) {
    throw DomainError("polar_rhs: pole");
  }
  return {-eta + std::sin(p.phi), std::cos(p.phi) * std::cos(p.theta) / s};
}

double motion_invariant(const BlochPoint& p, double eta) {
  if (!(std::abs(p.phi) < kHalfPi)) {
    throw DomainError("motion_invariant: |phi| must be below pi/2");
  }
  return std::sin(p.theta) * std::cos(p.phi) * std::pow(std::tan(0.25 * kPi + 0.5 * p.phi), eta);
}

BipartiteState stationary_state(double eta) {
  if (!(std::abs(eta) <= 1.0)) {
    throw DomainError("stationary_state: no stationary state for |eta| > 1");
  }
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 0) = std::numbers::sqrt2 / 2.0;
  c(1, 1) = std::polar(std::numbers::sqrt2 / 2.0, std::asin(eta));
  return BipartiteState(c);
}

double stationary_residual(const BipartiteState& s, double eta, double gamma) {
  if (s.dim() != 2) throw std::invalid_argument("stationary_residual: 2x2 states only");
  const auto [d0, d1] = coupled_rhs(s(0, 0), s(1, 1), eta, gamma);
  Eigen::Vector2cd v(s(0, 0), s(1, 1));
  Eigen::Vector2cd r(d0, d1);
  const cplx proj = v.dot(r);
  return (r - proj * v).norm();
}

cplx induced_phase(cplx eta, cplx gamma) { return std::asin(eta / gamma); }

std::string to_string(Regime r) { return r == Regime::Factorizing ? "factorizing" : "bounded"; }

CompetitionResult simulate_competition(const BlochPoint& start, double eta, const CompetitionOptions& opt) {
  if (!(start.theta > 0.0 && start.theta < kPi) || !std::isfinite(start.phi)) {
    throw DomainError("simulate_competition: theta0 must lie in (0, pi)");
  }
  if (!std::isfinite(eta)) throw DomainError("simulate_competition: eta must be finite");
  if (!(opt.dt > 0.0) || !(opt.t_max > 0.0)) {
    throw std::invalid_argument("simulate_competition: dt and t_max must be positive");
  }

  CompetitionResult out;
  out.eta = eta;
  out.start = start;
  const bool collapsing = std::abs(eta) > 1.0;
  const double slope_bound = std::abs(eta) - 1.0;

  double inv0 = std::numeric_limits<double>::quiet_NaN();
  if (std::abs(start.phi) < kHalfPi - kInvariantMargin) inv0 = motion_invariant(start, eta);
  out.invariant_drift = std::isnan(inv0) ? inv0 : 0.0;

  int dtheta_sign = 0;
  out.min_abs_dtheta = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;

  auto record = [&](double t, double theta, double phi, bool force) {
    if (force || (opt.sample_stride > 0 && steps % opt.sample_stride == 0)) {
      if (out.samples.empty() || out.samples.back().t != t) out.samples.push_back({t, theta, phi});
    }
  };

  auto observe_angles = [&](double theta, double phi) {
    const double dth = -eta + std::sin(phi);
    out.min_abs_dtheta = std::min(out.min_abs_dtheta, std::abs(dth));
    const int sg = dth > 0.0 ? 1 : (dth < 0.0 ? -1 : 0);
    if (sg == 0 || (dtheta_sign != 0 && sg != dtheta_sign)) out.theta_monotone = false;
    if (dtheta_sign == 0) dtheta_sign = sg;
    if (!std::isnan(inv0) && std::abs(phi) < kHalfPi - kInvariantMargin &&
        0.5 * std::sin(theta) > kInvariantMargin) {
      const double rel = std::abs(motion_invariant({theta, phi}, eta) - inv0) / std::abs(inv0);
      out.invariant_drift = std::max(out.invariant_drift, rel);
    }
  };

  // Phase 1: direct integration in (theta, phi).
  using V2 = Eigen::Vector2d;
  auto rhs = [&](double, const V2& x) -> V2 {
    const auto [a, b] = polar_rhs({x(0), x(1)}, eta);
    return V2(a, b);
  };
  auto events = [&](const V2& x) -> int {
    if (!(0.5 * std::sin(x(0)) > opt.eps_fact)) return 0;
    if (eta > 1.0 && x(0) <= kPoleSwitch) return 1;
    if (eta < -1.0 && x(0) >= kPi - kPoleSwitch) return 1;
    return kNoEvent;
  };
  FlowOptions fo;
  fo.dt = opt.dt;
  fo.t_max = opt.t_max;
  auto observer = [&](double t, const V2& x) {
    observe_angles(x(0), x(1));
    record(t, x(0), x(1), steps == 0);
    ++steps;
  };
  const auto res = integrate_rk4(rhs, V2(start.theta, start.phi), 0.0, events, fo, observer);
  out.end = {res.x(0), res.x(1)};
  out.t_end = res.t;

  if (res.stop == FlowStop::Event && res.event != 1) {
    // Reached |det| <= eps without the pole switch (|eta| <= 1 branch).
    out.t_factorize = res.t;
    out.phi_at_factorization = res.x(1);
  }

  if (res.stop == FlowStop::Event && res.event == 1) {
    // Phase 2: regularized variables on the mirrored flow heading to theta = 0.
    const bool mirror = eta < 0.0;
    const double e = mirror ? -eta : eta;
    const double theta_m = mirror ? kPi - res.x(0) : res.x(0);
    const double phi_m = mirror ? -res.x(1) : res.x(1);

    double phi_red = std::remainder(phi_m, 2.0 * kPi);
    const int branch = std::cos(phi_red) >= 0.0 ? 1 : -1;
    if (branch < 0 && phi_red < 0.0) phi_red += 2.0 * kPi;
    const double base = phi_m - phi_red;

    auto gd = [](double psi) { return kHalfPi - 2.0 * std::atan(std::exp(-psi)); };
    auto phi_of = [&](double psi) {
      const double pm = base + (branch > 0 ? gd(psi) : kPi - gd(psi));
      return mirror ? -pm : pm;
    };
    auto theta_of = [&](double l) {
      const double th = 2.0 * std::atan(std::exp(-l));
      return mirror ? kPi - th : th;
    };

    const double l0 = -std::log(std::tan(0.5 * theta_m));
    const double psi0 = std::atanh(std::sin(phi_red));
    const double t0 = res.t;
    const double l_fact = std::acosh(1.0 / (2.0 * opt.eps_fact));

    // x = (psi, t) as functions of L.
    auto lrhs = [&](double l, const V2& x) -> V2 {
      const double den = e - std::tanh(x(0));
      return V2(std::tanh(l) / den, 1.0 / (std::cosh(l) * den));
    };
    auto lobserve = [&](double l, const V2& x) {
      const double th = theta_of(l);
      const double ph = phi_of(x(0));
      observe_angles(th, ph);
      record(x(1), th, ph, false);
      ++steps;
    };

    FlowOptions lo;
    lo.dt = kLStep;
    lo.t_max = l_fact;
    lo.event_tol = 1e-12;
    auto past_tmax = [&](const V2& x) { return x(1) > opt.t_max ? 0 : kNoEvent; };
    const auto lr = integrate_rk4(lrhs, V2(psi0, t0), l0, past_tmax, lo, lobserve);

    const double l_end = lr.t;
    out.end = {theta_of(l_end), phi_of(lr.x(0))};
    out.t_end = lr.x(1);
    if (lr.stop == FlowStop::TimeLimit) {
      out.t_factorize = lr.x(1);
      out.phi_at_factorization = out.end.phi;

      FlowOptions co;
      co.dt = kLStep;
      co.t_max = kLCap;
      co.event_tol = 1e-12;
      auto converged = [&](const V2& x) { return 2.0 * std::atan(std::exp(-x(0))) < kPhaseConverged ? 0 : kNoEvent; };
      const auto cr = integrate_rk4(lrhs, lr.x, l_end, converged, co);
      out.phi_final = phi_of(cr.x(0));
    }
  }
  if (out.t_factorize && !out.phi_final) out.phi_final = out.phi_at_factorization;

  record(out.t_end, out.end.theta, out.end.phi, true);

  const bool slope_ok = collapsing && out.theta_monotone && out.min_abs_dtheta >= slope_bound * (1.0 - 1e-9);
  out.regime = (out.t_factorize || slope_ok) ? Regime::Factorizing : Regime::Bounded;
  return out;
}

std::vector<std::string> competition_csv_header() {
  return {"eta", "theta0", "phi0", "regime", "t_factorize", "phi_final", "invariant_drift"};
}

std::vector<std::string> competition_csv_row(const CompetitionResult& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {fmt(r.eta),
          fmt(r.start.theta),
          fmt(r.start.phi),
          to_string(r.regime),
          fmt(r.t_factorize.value_or(nan)),
          fmt(r.phi_final.value_or(nan)),
          fmt(r.invariant_drift)};
}

double ion_trap_delay(double linewidth_ev, double hbar_ev_s) {
  if (!(linewidth_ev > 0.0)) throw DomainError("ion_trap_delay: linewidth must be positive");
  return hbar_ev_s / linewidth_ev;
}

double ion_trap_delay_from_frequency(double f_hz, FrequencyConvention conv) {
  if (!(f_hz > 0.0)) throw DomainError("ion_trap_delay_from_frequency: frequency must be positive");
  const double energy = conv == FrequencyConvention::Ordinary ? kHbarEVs * 2.0 * kPi * f_hz : kHbarEVs * f_hz;
  return ion_trap_delay(energy);
}

}  // namespace inl
