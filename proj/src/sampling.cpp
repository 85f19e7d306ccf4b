#include "inl/sampling.hpp"

#include <numbers>

namespace inl {

CMatrix ginibre(int n, RngStream& rng) {
  CMatrix g(n, n);
  const double s = std::numbers::sqrt2 / 2.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = cplx(s * re, s * im);
    }
  }
  return g;
}

CMatrix haar_unitary(int n, RngStream& rng) {
  const CMatrix g = ginibre(n, rng);
  const Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const cplx d = r(k, k);
    const double mag = std::abs(d);
    if (mag > 0.0) {
      q.col(k) *= d / mag;
    }
  }
  return q;
}

BipartiteState random_state(int n, RngStream& rng) {
  return BipartiteState::normalized(ginibre(n, rng));
}

CMatrix random_hermitian(int n, RngStream& rng) {
  const CMatrix g = ginibre(n, rng);
  return 0.5 * (g + g.adjoint());
}

}  // namespace inl
