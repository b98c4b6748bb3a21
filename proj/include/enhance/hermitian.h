// Dense eigendecomposition of small complex Hermitian matrices by cyclic
// Jacobi rotations. Sized for per-bin spatial matrices (M <= 8 or so).
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "enhance/fft.h"

namespace enhance {

class HermitianEig {
 public:
  explicit HermitianEig(std::size_t n);

  // Decomposes a row-major n x n Hermitian matrix. Eigenvalues land in
  // `values` sorted descending; eigenvectors are accessed via vector().
  void decompose(std::span<const cplx> matrix);

  std::vector<double> values;

  // Component `row` of the eigenvector paired with values[index].
  cplx vector(std::size_t index, std::size_t row) const { return vecs_[row * n_ + index]; }

 private:
  std::size_t n_;
  std::vector<cplx> work_;  // row-major working copy
  std::vector<cplx> vecs_;  // accumulated rotations, eigenvectors in columns
  std::vector<std::size_t> order_;
};

}  // namespace enhance
