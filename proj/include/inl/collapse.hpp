#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "inl/rng.hpp"
#include "inl/state_algebra.hpp"
#include "inl/stats.hpp"

namespace inl {

/// Nonlinear measurement term: Lambda1 acts on particle 1 from the left,
/// Lambda2 on particle 2 from the right.
struct MeasurementOperator {
  CMatrix lambda1;
  CMatrix lambda2;
  double eta = 0.0;

  /// (eta/2) diag(1, -1) on particle 1, nothing on particle 2.
  static MeasurementOperator canonical(double eta);

  /// Arbitrary single-sided operator; lambda2 is set to zero.
  static MeasurementOperator one_sided(CMatrix lambda1, double eta);

  int dim() const noexcept { return static_cast<int>(lambda1.rows()); }

  /// Throws std::invalid_argument unless both blocks are hermitian and the
  /// traces cancel (tolerance 1e-12).
  void validate() const;
};

struct HamiltonianPair {
  CMatrix h1;
  CMatrix h2;

  static HamiltonianPair zero(int n);
  void validate() const;
};

/// Linear two-body term (R(C))_jk = sum_lm R_jklm C_lm, stored sparsely.
struct TwoBodyCoupling {
  struct Entry {
    int j, k, l, m;
    cplx value;
  };
  int n = 2;
  std::vector<Entry> entries;

  /// Exchange coupling between |00> and |11>: R_0011 = R_1100 = i gamma / 2.
  static TwoBodyCoupling spin_spin(double gamma);

  CMatrix apply(const CMatrix& c) const;
};

struct PlayRecord {
  int sign = 1;
  double stake = 0.0;
  double tau_start = 0.0;
  double tau_end = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct TrajectorySample {
  double t;
  CMatrix c;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<PlayRecord> plays;
  std::optional<int> outcome;
  std::optional<double> termination_time;
  CMatrix final_state;
  /// Total |delta y0| accumulated over all plays.
  double tau = 0.0;
};

struct CollapseOptions {
  double dt = 1e-3;
  double eps_fact = kFactorizationTol;
  /// Record every k-th integrator step (0: only start and end points).
  std::size_t sample_stride = 0;
  /// Extra sample times for flow_deterministic.
  std::vector<double> output_times;
  /// Guard on the number of plays in a single game.
  std::size_t max_plays = 1000;
  /// Per-step bound on norm drift.
  double max_norm_drift = 1e-8;
};

/// Lambda1 hat(C) + hat(C) Lambda2 - i H1 C - i C H2 + R(C).
/// hat(C) is only evaluated when eta != 0.
CMatrix rhs_modified(const CMatrix& c, const MeasurementOperator& m, const HamiltonianPair& h,
                     const TwoBodyCoupling* r = nullptr, double eps = kFactorizationTol);
CMatrix rhs_modified(const BipartiteState& s, const MeasurementOperator& m, const HamiltonianPair& h,
                     const TwoBodyCoupling* r = nullptr, double eps = kFactorizationTol);

/// exp(-i H1 t) C exp(-i H2 t).
BipartiteState to_interaction_picture(const BipartiteState& s, const HamiltonianPair& h, double t);

/// Weights of the positive and non-positive eigenspaces of Lambda1 / eta on
/// particle 1. For the canonical operator these are the row sums of |C|^2.
std::pair<double, double> fortunes(const CMatrix& c, const MeasurementOperator& m);
std::pair<double, double> fortunes(const BipartiteState& s, const MeasurementOperator& m);

/// Integrates dC/dt = sign Lambda1 hat(C) (with |eta|) until the factorized
/// boundary or until `stop` fires. On the boundary the final state is snapped
/// to the nearest factorized state and the outcome is recorded.
Trajectory flow_deterministic(const BipartiteState& s0, const MeasurementOperator& m, int sign,
                              const CollapseOptions& opt = {},
                              const std::function<bool(const CMatrix&)>& stop = {});

/// Closed-form fortunes for the canonical operator started from
/// diag(sqrt(alpha), sqrt(1 - alpha)). Valid up to termination_time.
std::pair<double, double> analytic_y(double alpha, double eta, double t, int sign = 1);

/// Time at which the canonical flow from alpha reaches y0 = 1 (sign +1) or
/// y0 = 0 (sign -1).
double termination_time(double alpha, double eta, int sign = 1);

struct PlayResult {
  Trajectory segment;
  PlayRecord record;
  /// The play ended on the factorized boundary.
  bool terminal = false;
};

/// One double-or-nothing play. The sign is the first draw taken from rng.
PlayResult play(const BipartiteState& s, const MeasurementOperator& m, RngStream& rng,
                const CollapseOptions& opt = {});

/// Plays until the state factorizes.
Trajectory collapse(const BipartiteState& s0, const MeasurementOperator& m, RngStream& rng,
                    const CollapseOptions& opt = {});

/// |det C|^{2/n} (C C^dagger)^{-1}.
CMatrix transfer_V(const CMatrix& c, double eps = kFactorizationTol);

/// Z = I + Lambda1 V(C) dt.
CMatrix transfer_Z(const CMatrix& c, const CMatrix& lambda1, double dt, double eps = kFactorizationTol);

/// Z(C) C.
CMatrix transfer_step(const CMatrix& c, const MeasurementOperator& m, double dt,
                      double eps = kFactorizationTol);

/// C + dt Lambda1 hat(C).
CMatrix euler_step(const CMatrix& c, const MeasurementOperator& m, double dt,
                   double eps = kFactorizationTol);

/// Diagonal and anti-diagonal parts of a 2x2 state with their weights.
struct CellSplit {
  CMatrix diagonal;
  CMatrix anti_diagonal;
  double weight_diagonal = 0.0;
  double weight_anti_diagonal = 0.0;
};
CellSplit cell_split(const CMatrix& c);

struct TrajectoryOutcome {
  int outcome = -1;
  double termination_time = 0.0;
  std::size_t plays = 0;
  double tau = 0.0;
};

struct EnsembleOptions {
  CollapseOptions collapse;
  std::size_t threads = 0;
};

/// Independent collapses; trajectory i uses RngStream(seed, i).
std::vector<TrajectoryOutcome> run_ensemble(const BipartiteState& s0, const MeasurementOperator& m,
                                            std::size_t count, std::uint64_t seed,
                                            const EnsembleOptions& opt = {});

struct EnsembleStats {
  std::size_t count = 0;
  std::vector<std::size_t> outcome_counts;
  std::vector<double> outcome_frequency;
  Summary collapse_time;
  Summary plays;
};

EnsembleStats summarize_ensemble(const std::vector<TrajectoryOutcome>& runs, int dim);

EnsembleStats born_ensemble(const BipartiteState& s0, const MeasurementOperator& m, std::size_t count,
                            std::uint64_t seed, const EnsembleOptions& opt = {});

}  // namespace inl
