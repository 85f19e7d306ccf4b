#pragma once

#include "inl/rng.hpp"
#include "inl/state_algebra.hpp"

namespace inl {

/// Complex Ginibre matrix: iid entries with N(0, 1/2) real and imaginary parts.
CMatrix ginibre(int n, RngStream& rng);

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
CMatrix haar_unitary(int n, RngStream& rng);

/// Normalized state with Ginibre coefficients.
BipartiteState random_state(int n, RngStream& rng);

/// Hermitian matrix (G + G^dagger)/2.
CMatrix random_hermitian(int n, RngStream& rng);

}  // namespace inl
