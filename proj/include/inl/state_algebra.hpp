#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inl/errors.hpp"

namespace inl {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CMatrix2 = Eigen::Matrix2cd;

/// Default factorization tolerance, applied to |det C|^{2/n}.
inline constexpr double kFactorizationTol = 1e-9;

/// Sign s in hat(C) = exp(i s arg det C) * T(C) for 2x2 states, with T the
/// time-reversal map eps C^* eps^T and eps = [[0,-1],[1,0]]. Fixed by direct
/// adjugate algebra and checked numerically in the test suite.
inline constexpr int kTimeReversalPhaseSign = +1;

/// Coefficient matrix of a two-particle state with equal local dimension n.
/// Particle-1 operators act from the left, particle-2 operators from the right.
class BipartiteState {
 public:
  /// Largest |Tr(C^dagger C) - 1| accepted by the validating constructor.
  static constexpr double kNormTolerance = 1e-8;

  /// Validates shape, finiteness and unit trace norm (within kNormTolerance).
  explicit BipartiteState(CMatrix c);

  /// Rescales c to unit trace norm. Throws DomainError on a zero matrix.
  static BipartiteState normalized(CMatrix c);

  /// diag(d_0, ..., d_{n-1}), normalized.
  static BipartiteState diagonal(std::span<const cplx> d);

  int dim() const noexcept { return static_cast<int>(c_.rows()); }
  const CMatrix& matrix() const noexcept { return c_; }
  cplx operator()(int i, int j) const { return c_(i, j); }
  double norm_squared() const noexcept { return c_.squaredNorm(); }

 private:
  CMatrix c_;
};

/// U * diag(singulars) * V == C, singulars descending.
struct SchmidtForm {
  CMatrix left;
  Eigen::VectorXd singulars;
  CMatrix right;

  CMatrix reconstruct() const;
  /// Number of singular values above tol.
  int rank(double tol = 1e-12) const;
};

struct EntanglementClass {
  enum class Tag { Factorized, PartiallyEntangled, MaximallyEntangled };
  /// Only set for n = 2.
  std::optional<Tag> tag;
  double det_magnitude = 0.0;
};

std::string to_string(EntanglementClass::Tag tag);

/// <a|b> = Tr(a^dagger b).
cplx inner(const BipartiteState& a, const BipartiteState& b);

cplx determinant(const CMatrix& c);

/// |det C|^{2/n}, computed through log|det| so it does not underflow for
/// large n.
double det_measure(const CMatrix& c);

/// hat(C) = |det C|^{2/n} (C^dagger)^{-1}. Not renormalized.
/// Throws DomainError when |det C|^{2/n} <= eps.
CMatrix hat(const CMatrix& c, double eps = kFactorizationTol);
CMatrix hat(const BipartiteState& s, double eps = kFactorizationTol);

/// eps C^* eps^T, eps = [[0,-1],[1,0]]. 2x2 only.
CMatrix time_reversal(const CMatrix& c);

SchmidtForm schmidt(const BipartiteState& s);

EntanglementClass classify(const BipartiteState& s, double eps = kFactorizationTol);

/// A C B for unitary A (particle 1) and B (particle 2).
BipartiteState apply_local(const CMatrix& a, const BipartiteState& s, const CMatrix& b);

bool is_unitary(const CMatrix& u, double tol = 1e-12);
bool is_hermitian(const CMatrix& h, double tol = 1e-12);

/// Closest factorized state: keeps the leading Schmidt component only.
CMatrix factorized_projection(const CMatrix& c);

namespace detail {

// Fixed-size fast paths used inside integrator hot loops.

inline cplx det2(const CMatrix2& c) noexcept {
  return c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
}

/// 2x2 hat map through the adjugate: (|det|/det^*) [[d^*, -c^*], [-b^*, a^*]].
inline CMatrix2 hat2(const CMatrix2& c, double eps) {
  const cplx d = det2(c);
  const double mag = std::abs(d);
  if (!(mag > eps)) {
    throw DomainError("hat: |det C| at or below factorization tolerance");
  }
  const cplx scale = mag / std::conj(d);
  CMatrix2 r;
  r(0, 0) = scale * std::conj(c(1, 1));
  r(0, 1) = -scale * std::conj(c(1, 0));
  r(1, 0) = -scale * std::conj(c(0, 1));
  r(1, 1) = scale * std::conj(c(0, 0));
  return r;
}

inline CMatrix hat_of(const CMatrix& c, double eps) { return hat(c, eps); }
inline CMatrix2 hat_of(const CMatrix2& c, double eps) { return hat2(c, eps); }

inline cplx det_of(const CMatrix& c) { return determinant(c); }
inline cplx det_of(const CMatrix2& c) { return det2(c); }

inline double det_measure_of(const CMatrix& c) { return det_measure(c); }
inline double det_measure_of(const CMatrix2& c) { return std::abs(det2(c)); }

}  // namespace detail

}  // namespace inl
