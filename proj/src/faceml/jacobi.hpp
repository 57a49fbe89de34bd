#pragma once

#include <cstddef>
#include <vector>

namespace facekey::faceml {

// Eigendecomposition of a real symmetric matrix.
struct SymmetricEigen {
  std::size_t n = 0;
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // row-major n x n; column j is the eigenvector of values[j]
  int sweeps = 0;

  double vector_component(std::size_t row, std::size_t col) const { return vectors[row * n + col]; }
};

// Cyclic Jacobi rotations over a row-major symmetric matrix. Stops when the
// off-diagonal Frobenius norm drops to tolerance * ||A||_F. The rotation order
// is fixed, so results are bit-reproducible for identical input.
SymmetricEigen jacobi_eigen(std::vector<double> matrix, std::size_t n, double tolerance = 1e-12,
                            int max_sweeps = 100);

}  // namespace facekey::faceml
