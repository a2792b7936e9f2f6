#pragma once

// Random instance generators shared by the unit and acceptance suites.

#include <random>

#include "openext/numerics.hpp"

namespace openext::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_complex(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline RealMatrix random_real(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> g;
  RealMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix random_hermitian(Rng& rng, Index n) {
  const Matrix a = random_complex(rng, n, n);
  return (a + a.adjoint()) / 2.0;
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
inline Matrix random_unitary(Rng& rng, Index n) {
  if (n == 0) return Matrix(0, 0);
  Eigen::HouseholderQR<Matrix> qr(random_complex(rng, n, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// U·diag(values)·U† for a random unitary U.
inline Matrix planted_spectrum(Rng& rng, const RealVector& values) {
  const Matrix u = random_unitary(rng, values.size());
  return u * values.cast<Complex>().asDiagonal() * u.adjoint();
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

}  // namespace openext::testing
