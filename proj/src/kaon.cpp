#include "inl/kaon.hpp"

#include <cmath>
#include <numbers>

#include "inl/errors.hpp"

namespace inl {

void KaonParams::validate() const {
  if (!(std::abs(gamma) > 0.0) || !(tau_kl > 0.0) || !(hbar > 0.0) || !(std::abs(epsilon_exp) > 0.0)) {
    throw DomainError("KaonParams: magnitudes must be positive");
  }
  if (!(branching > 0.0 && branching <= 1.0)) {
    throw DomainError("KaonParams: branching fraction must lie in (0, 1]");
  }
}

double kaon_eta(const KaonParams& p) {
  p.validate();
  const double t0 = p.tau_kl / p.branching;
  return std::numbers::pi * p.hbar / t0;
}

cplx kaon_delta(double eta, cplx gamma) { return std::asin(cplx(eta) / gamma); }

KaonComparison compare_experiment(cplx delta_theory, const KaonParams& p) {
  KaonComparison c;
  c.delta_theory = delta_theory;
  c.delta_theory_abs = std::abs(delta_theory);
  c.delta_exp = cplx(0.0, 2.0) * p.epsilon_exp;
  c.delta_exp_abs = std::abs(c.delta_exp);
  c.ratio = c.delta_theory_abs / c.delta_exp_abs;
  c.within_claim = c.ratio >= 0.95 && c.ratio <= 1.25;
  return c;
}

KaonReport kaon_pipeline(const KaonParams& p) {
  KaonReport r;
  r.eta_ev = kaon_eta(p);
  r.delta_plus = kaon_delta(r.eta_ev, p.gamma);
  r.delta_minus = kaon_delta(-r.eta_ev, p.gamma);
  r.comparison = compare_experiment(r.delta_plus, p);
  return r;
}

KaonSensitivity sensitivity(const KaonParams& p, double rel_step) {
  auto abs_delta = [](const KaonParams& q) { return std::abs(kaon_delta(kaon_eta(q), q.gamma)); };
  const double base = abs_delta(p);
  KaonSensitivity s;

  const double hb = p.branching * rel_step;
  KaonParams up = p, dn = p;
  up.branching += hb;
  dn.branching -= hb;
  if (up.branching > 1.0) {
    up.branching = p.branching;
    s.d_abs_d_branching = (abs_delta(up) - abs_delta(dn)) / hb;
  } else {
    s.d_abs_d_branching = (abs_delta(up) - abs_delta(dn)) / (2.0 * hb);
  }

  const double ht = p.tau_kl * rel_step;
  up = p;
  dn = p;
  up.tau_kl += ht;
  dn.tau_kl -= ht;
  s.d_abs_d_tau = (abs_delta(up) - abs_delta(dn)) / (2.0 * ht);

  s.elasticity_branching = s.d_abs_d_branching * p.branching / base;
  s.elasticity_tau = s.d_abs_d_tau * p.tau_kl / base;
  return s;
}

}  // namespace inl
