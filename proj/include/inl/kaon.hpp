#pragma once

#include <complex>

namespace inl {

using cplx = std::complex<double>;

struct KaonParams {
  /// Complex K1/K2 mass splitting, eV.
  cplx gamma{3.5e-6, 3.5e-6};
  /// K_L lifetime, s.
  double tau_kl = 5.17e-8;
  /// Semileptonic branching fraction.
  double branching = 0.66;
  /// eV s.
  double hbar = 6.582e-16;
  cplx epsilon_exp{1.6e-3, 1.6e-3};

  void validate() const;
};

/// pi hbar / t0 with t0 = tau_kl / branching, in eV.
double kaon_eta(const KaonParams& p);

/// Principal-branch asin(eta / gamma).
cplx kaon_delta(double eta, cplx gamma);

struct KaonComparison {
  cplx delta_theory;
  double delta_theory_abs = 0.0;
  cplx delta_exp;
  double delta_exp_abs = 0.0;
  double ratio = 0.0;
  /// ratio in [0.95, 1.25].
  bool within_claim = false;
};

/// delta_exp = 2 i epsilon_exp; comparison by magnitude.
KaonComparison compare_experiment(cplx delta_theory, const KaonParams& p);

struct KaonReport {
  double eta_ev = 0.0;
  cplx delta_plus;
  cplx delta_minus;
  KaonComparison comparison;
};

KaonReport kaon_pipeline(const KaonParams& p);

/// Central-difference derivatives of |delta| and the matching elasticities
/// (d ln|delta| / d ln x).
struct KaonSensitivity {
  double d_abs_d_branching = 0.0;
  double d_abs_d_tau = 0.0;
  double elasticity_branching = 0.0;
  double elasticity_tau = 0.0;
};

KaonSensitivity sensitivity(const KaonParams& p, double rel_step = 1e-5);

}  // namespace inl
