#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "inl/rng.hpp"
#include "inl/state_algebra.hpp"

namespace inl {

/// Filter splitting an n-dimensional space into a (+) block of dimension m
/// and a (-) block of dimension n - m.
struct SubspaceFilter {
  int n = 2;
  int m = 1;
  double eta = 1.0;

  void validate() const;
};

/// Diagonal occupations y_j = |C_jj|^2.
struct DiagonalOccupation {
  std::vector<double> y;

  static DiagonalOccupation uniform(int n);
  int dim() const noexcept { return static_cast<int>(y.size()); }
  /// Entries in [0, 1] summing to 1 within 1e-12.
  void validate() const;
};

/// (eta/2) (pi_plus / m - pi_minus / (n - m)).
CMatrix lambda_matrix(const SubspaceFilter& f);

/// y_j + n tau / m on the (+) block, y_j - n tau / (n - m) on the (-) block.
DiagonalOccupation highdim_flow_tau(const DiagonalOccupation& y0, const SubspaceFilter& f, double tau);

/// (1 - m/n) min_{j >= m} y_j.
double termination_tau(const DiagonalOccupation& y0, const SubspaceFilter& f);

/// (2/eta) int_0^tau prod_j y_j(s)^{-1/n} ds. The power singularity of the
/// vanishing factors at termination is removed by the substitution
/// tau_end - s = w^q, q = 1 / (1 - k/n) with k the number of vanishing factors.
double time_of_tau(const DiagonalOccupation& y0, const SubspaceFilter& f, double tau);

/// Gauss hypergeometric 2F1(a, b; c; z) for -1 < z < 1. Direct series for
/// z <= 0.9; above that the 1 - z connection formula (c - a - b not an
/// integer).
double hypergeometric_2f1(double a, double b, double c, double z);

/// Direct power series only, summed until the terms fall below rel_tol.
double hypergeometric_2f1_series(double a, double b, double c, double z, double rel_tol = 1e-16,
                                 std::size_t max_terms = 1000000);

/// (2/eta)(1 - m/n) 2F1(1, 1; 1 + m/n; 1 - m/n): termination time from the
/// uniform state.
double termination_time_hyp(const SubspaceFilter& f);

struct StageOptions {
  double dt = 1e-3;
  double eps_fact = kFactorizationTol;
  std::size_t max_plays = 1000;
};

struct StageResult {
  /// Surviving block, renormalized.
  Eigen::VectorXcd amplitudes;
  double t = 0.0;
  std::size_t plays = 0;
  /// 0 when the (+) block survived, 1 for the (-) block.
  int kept_block = 0;
};

/// Collapses diagonal amplitudes c under Lambda = (n/2) lambda_matrix(n, m),
/// the normalization under which the uniform state terminates at
/// termination_time_hyp. With rng == nullptr the flow runs with sign +1;
/// otherwise the stage is played as a double-or-nothing game on the block
/// weights.
StageResult diagonal_stage(const Eigen::VectorXcd& c, int m, double eta, RngStream* rng,
                           const StageOptions& opt = {});

enum class BisectionMode { Deterministic, Noisy };

struct StageLog {
  int dim_before = 0;
  int dim_after = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t plays = 0;
  int kept_block = 0;
};

struct BisectionResult {
  double total_time = 0.0;
  std::vector<StageLog> stages;
};

/// log2(n) successive half-dimension filters from the uniform maximally
/// entangled state. Noisy mode requires rng.
BisectionResult bisection_collapse(int n, double eta, BisectionMode mode, RngStream* rng = nullptr,
                                   const StageOptions& opt = {});

/// Total times of `count` noisy runs; run i uses RngStream(seed, i).
std::vector<double> bisection_ensemble(int n, double eta, std::size_t count, std::uint64_t seed,
                                       std::size_t threads = 0, const StageOptions& opt = {});

}  // namespace inl
