#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inl/state_algebra.hpp"

namespace inl {

/// C00 = cos(theta/2), C11 = sin(theta/2) exp(i phi).
struct BlochPoint {
  double theta = 0.0;
  double phi = 0.0;
};

BlochPoint to_bloch(cplx c00, cplx c11);
std::pair<cplx, cplx> from_bloch(const BlochPoint& p);

/// Diagonal-cell flow with collapse strength eta and exchange coupling gamma:
///   dc00/dt =  (eta/2)|c00 c11| / conj(c00) + (i gamma/2) c11
///   dc11/dt = -(eta/2)|c00 c11| / conj(c11) + (i gamma/2) c00
std::pair<cplx, cplx> coupled_rhs(cplx c00, cplx c11, double eta, double gamma);

/// (dtheta/dt, dphi/dt) = (-eta + sin phi, cos phi cot theta), gamma = 1.
std::pair<double, double> polar_rhs(const BlochPoint& p, double eta);

/// sin(theta) cos(phi) tan(pi/4 + phi/2)^eta. Requires |phi| < pi/2.
double motion_invariant(const BlochPoint& p, double eta);

/// (|00> + exp(i asin eta)|11>) / sqrt(2), |eta| <= 1.
BipartiteState stationary_state(double eta);

/// Component of coupled_rhs orthogonal to the state itself. The stationary
/// states are eigenvectors of the flow (they only pick up a global phase), so
/// this is the quantity that vanishes on them.
double stationary_residual(const BipartiteState& s, double eta, double gamma = 1.0);

/// Principal-branch asin(eta / gamma).
cplx induced_phase(cplx eta, cplx gamma);

enum class Regime { Factorizing, Bounded };
std::string to_string(Regime r);

struct CompetitionSample {
  double t;
  double theta;
  double phi;
};

struct CompetitionOptions {
  double dt = 1e-3;
  double t_max = 100.0;
  /// |det C| = sin(theta)/2 below which the state counts as factorized.
  double eps_fact = kFactorizationTol;
  /// Record every k-th step (0: start and end only).
  std::size_t sample_stride = 0;
};

struct CompetitionResult {
  double eta = 0.0;
  BlochPoint start;
  Regime regime = Regime::Bounded;
  std::optional<double> t_factorize;
  /// Phase at the factorization time.
  std::optional<double> phi_at_factorization;
  /// Limit of phi along the collapsing branch (continued past t_factorize).
  std::optional<double> phi_final;
  /// Largest relative change of motion_invariant over samples with
  /// |phi| < pi/2 - 1e-6 (NaN when the invariant is undefined at the start).
  double invariant_drift = 0.0;
  bool theta_monotone = true;
  double min_abs_dtheta = 0.0;
  BlochPoint end;
  double t_end = 0.0;
  std::vector<CompetitionSample> samples;
};

/// Integrates the polar flow. Near a pole the flow is continued in the
/// regularized variables L = -ln tan(theta/2), psi = atanh(sin phi).
CompetitionResult simulate_competition(const BlochPoint& start, double eta, const CompetitionOptions& opt = {});

/// Columns: eta, theta0, phi0, regime, t_factorize, phi_final, invariant_drift.
std::vector<std::string> competition_csv_header();
std::vector<std::string> competition_csv_row(const CompetitionResult& r);

inline constexpr double kHbarEVs = 6.582119569e-16;

enum class FrequencyConvention { Ordinary, Angular };

/// hbar / linewidth, linewidth in eV, result in seconds.
double ion_trap_delay(double linewidth_ev, double hbar_ev_s = kHbarEVs);

/// Delay for a linewidth quoted as a frequency in Hz. Ordinary: E = h f,
/// so the delay is 1 / (2 pi f). Angular: E = hbar f, delay 1 / f.
double ion_trap_delay_from_frequency(double f_hz, FrequencyConvention conv);

}  // namespace inl
