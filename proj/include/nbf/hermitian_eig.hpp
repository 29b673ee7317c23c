#pragma once

#include <vector>

#include "nbf/common.hpp"

namespace nbf {

/// Eigendecomposition of a Hermitian matrix (row-major, a[i*dim+j]) via
/// cyclic complex Jacobi rotations. Eigenvalues ascending; vectors[i*dim+k]
/// is component i of the k-th eigenvector.
struct HermitianEig {
  std::vector<double> eigenvalues;
  std::vector<cdouble> vectors;
};
HermitianEig hermitian_eig(const cdouble* a, int dim);

/// In-place lower Cholesky factor of a Hermitian positive definite matrix.
/// Throws with a condition estimate when a pivot is not positive.
void cholesky(std::vector<cdouble>& a, int dim);

/// Solve L y = b (forward) and L^H x = y (backward) for a lower factor.
void solve_lower(const std::vector<cdouble>& l, int dim, std::vector<cdouble>& b);
void solve_lower_adjoint(const std::vector<cdouble>& l, int dim, std::vector<cdouble>& b);

/// Fix scale and phase: unit L2 norm, first entry with magnitude > 1e-12
/// rotated to be real-positive.
void fix_phase(std::vector<cdouble>& v);

}  // namespace nbf
