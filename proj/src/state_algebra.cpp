#include "inl/state_algebra.hpp"

#include <algorithm>
#include <numeric>

namespace inl {

namespace {

void require_square(const CMatrix& c, const char* what) {
  if (c.rows() == 0 || c.rows() != c.cols()) {
    throw std::invalid_argument(std::string(what) + ": coefficient matrix must be square and non-empty");
  }
}

}  // namespace

BipartiteState::BipartiteState(CMatrix c) : c_(std::move(c)) {
  require_square(c_, "BipartiteState");
  if (!c_.allFinite()) {
    throw std::invalid_argument("BipartiteState: non-finite coefficient");
  }
  const double n2 = c_.squaredNorm();
  if (std::abs(n2 - 1.0) > kNormTolerance) {
    throw std::invalid_argument("BipartiteState: trace norm " + std::to_string(n2) + " is not 1");
  }
}

BipartiteState BipartiteState::normalized(CMatrix c) {
  require_square(c, "BipartiteState::normalized");
  if (!c.allFinite()) {
    throw std::invalid_argument("BipartiteState::normalized: non-finite coefficient");
  }
  const double norm = c.norm();
  if (!(norm > 0.0)) {
    throw DomainError("BipartiteState::normalized: zero matrix");
  }
  c /= norm;
  return BipartiteState(std::move(c));
}

BipartiteState BipartiteState::diagonal(std::span<const cplx> d) {
  CMatrix c = CMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
  }
  return normalized(std::move(c));
}

CMatrix SchmidtForm::reconstruct() const {
  return left * singulars.cast<cplx>().asDiagonal() * right;
}

int SchmidtForm::rank(double tol) const {
  return static_cast<int>((singulars.array() > tol).count());
}

std::string to_string(EntanglementClass::Tag tag) {
  switch (tag) {
    case EntanglementClass::Tag::Factorized: return "factorized";
    case EntanglementClass::Tag::PartiallyEntangled: return "partially-entangled";
    case EntanglementClass::Tag::MaximallyEntangled: return "maximally-entangled";
  }
  return "unknown";
}

cplx inner(const BipartiteState& a, const BipartiteState& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("inner: dimension mismatch");
  }
  return (a.matrix().adjoint() * b.matrix()).trace();
}

cplx determinant(const CMatrix& c) {
  require_square(c, "determinant");
  if (c.rows() == 2) {
    return c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  }
  return c.partialPivLu().determinant();
}

double det_measure(const CMatrix& c) {
  require_square(c, "det_measure");
  const auto n = c.rows();
  if (n == 2) {
    return std::abs(c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0));
  }
  const Eigen::PartialPivLU<CMatrix> lu(c);
  const CMatrix& packed = lu.matrixLU();
  double log_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = std::abs(packed(i, i));
    if (u == 0.0) {
      return 0.0;
    }
    log_sum += std::log(u);
  }
  return std::exp(2.0 * log_sum / static_cast<double>(n));
}

CMatrix hat(const CMatrix& c, double eps) {
  require_square(c, "hat");
  if (c.rows() == 2) {
    return detail::hat2(CMatrix2(c), eps);
  }
  const double measure = det_measure(c);
  if (!(measure > eps)) {
    throw DomainError("hat: |det C|^{2/n} at or below factorization tolerance");
  }
  return measure * c.adjoint().partialPivLu().inverse();
}

CMatrix hat(const BipartiteState& s, double eps) { return hat(s.matrix(), eps); }

CMatrix time_reversal(const CMatrix& c) {
  if (c.rows() != 2 || c.cols() != 2) {
    throw std::invalid_argument("time_reversal: defined for 2x2 states only");
  }
  Eigen::Matrix2cd eps;
  eps << 0.0, -1.0, 1.0, 0.0;
  return eps * c.conjugate() * eps.transpose();
}

SchmidtForm schmidt(const BipartiteState& s) {
  const Eigen::JacobiSVD<CMatrix> svd(s.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const auto n = sv.size();

  // Descending, ties kept in input column order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return sv(a) > sv(b); });

  SchmidtForm out;
  out.left.resize(n, n);
  out.right.resize(n, n);
  out.singulars.resize(n);
  const CMatrix vh = svd.matrixV().adjoint();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.singulars(k) = sv(src);
    out.left.col(k) = svd.matrixU().col(src);
    out.right.row(k) = vh.row(src);
  }
  return out;
}

EntanglementClass classify(const BipartiteState& s, double eps) {
  EntanglementClass out;
  out.det_magnitude = std::abs(determinant(s.matrix()));
  if (s.dim() != 2) {
    return out;
  }
  using Tag = EntanglementClass::Tag;
  if (out.det_magnitude < eps) {
    out.tag = Tag::Factorized;
  } else if (std::abs(out.det_magnitude - 0.5) < eps) {
    out.tag = Tag::MaximallyEntangled;
  } else {
    out.tag = Tag::PartiallyEntangled;
  }
  return out;
}

bool is_unitary(const CMatrix& u, double tol) {
  if (u.rows() != u.cols()) {
    return false;
  }
  const CMatrix id = CMatrix::Identity(u.rows(), u.cols());
  return (u.adjoint() * u - id).cwiseAbs().maxCoeff() <= tol;
}

bool is_hermitian(const CMatrix& h, double tol) {
  if (h.rows() != h.cols()) {
    return false;
  }
  return (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

BipartiteState apply_local(const CMatrix& a, const BipartiteState& s, const CMatrix& b) {
  if (a.rows() != s.dim() || b.rows() != s.dim()) {
    throw std::invalid_argument("apply_local: dimension mismatch");
  }
  if (!is_unitary(a) || !is_unitary(b)) {
    throw std::invalid_argument("apply_local: local operators must be unitary");
  }
  return BipartiteState(a * s.matrix() * b);
}

CMatrix factorized_projection(const CMatrix& c) {
  const Eigen::JacobiSVD<CMatrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
}

}  // namespace inl
