#pragma once

// Dense Hermitian linear algebra and tolerance-aware subspace calculus.
//
// Everything here is templated on the Eigen scalar so the same routines serve
// the complex frequency operators and the real stiffness matrices of the
// oscillator models. The complex<double> aliases at the bottom are what the
// rest of the library uses.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "openext/errors.hpp"

namespace openext {

using Eigen::Index;

/// Relative tolerances shared by every operation.
struct Tolerances {
  double herm = 1e-10;
  double orth = 1e-10;
  double rank = 1e-9;
  double eig_cluster = 1e-8;
  double residual = 1e-9;

  void validate() const {
    for (double t : {herm, orth, rank, eig_cluster, residual}) {
      if (!(t > 0.0) || !std::isfinite(t)) {
        throw ValidationError("tolerances must be finite and strictly positive");
      }
    }
  }
};

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RealOf = typename Eigen::NumTraits<Scalar>::Real;

// ---------------------------------------------------------------------------
// Norms

template <typename Derived>
RealOf<typename Derived::Scalar> max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().maxCoeff();
}

/// Largest singular value.
template <typename Derived>
RealOf<typename Derived::Scalar> operator_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return 0;
  DenseMatrix<Scalar> a = m;
  Eigen::BDCSVD<DenseMatrix<Scalar>> svd(a);
  return svd.singularValues()(0);
}

/// Scale for relative thresholds: the operator norm, or 1 for a zero operator.
template <typename Derived>
RealOf<typename Derived::Scalar> norm_scale(const Eigen::MatrixBase<Derived>& m) {
  const auto n = operator_norm(m);
  return n > 0 ? n : RealOf<typename Derived::Scalar>(1);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// ---------------------------------------------------------------------------
// Hermitian operators

template <typename Scalar>
class BasicHermitian {
 public:
  using Matrix = DenseMatrix<Scalar>;

  BasicHermitian() = default;

  /// Accepts `m` if ‖M − M†‖_max ≤ τ_herm·(1 + ‖M‖_max); stores the exact
  /// Hermitian part.
  explicit BasicHermitian(const Matrix& m, const Tolerances& tol = {}) {
    if (m.rows() != m.cols()) {
      throw ValidationError("Hermitian operator must be square, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw ValidationError("Hermitian operator has non-finite entries");
    const auto defect = max_abs(m - m.adjoint());
    if (defect > tol.herm * (1 + max_abs(m))) {
      std::ostringstream os;
      os << "matrix is not Hermitian: max |M - M^H| = " << defect;
      throw ValidationError(os.str());
    }
    matrix_ = (m + m.adjoint()) / RealOf<Scalar>(2);
  }

  static BasicHermitian zero(Index n) { return BasicHermitian(Matrix::Zero(n, n)); }
  static BasicHermitian identity(Index n) { return BasicHermitian(Matrix::Identity(n, n)); }
  static BasicHermitian diagonal(const DenseVector<RealOf<Scalar>>& d) {
    return BasicHermitian(Matrix(d.template cast<Scalar>().asDiagonal()));
  }

  Index dim() const noexcept { return matrix_.rows(); }
  const Matrix& matrix() const noexcept { return matrix_; }
  operator const Matrix&() const noexcept { return matrix_; }

 private:
  Matrix matrix_;
};

// ---------------------------------------------------------------------------
// Eigen- and singular-value decompositions

template <typename Scalar>
struct Eigensystem {
  DenseVector<RealOf<Scalar>> values;  // ascending
  DenseMatrix<Scalar> vectors;         // columns
};

namespace detail {

/// Rotates `v` so its first component with modulus above `floor` is real positive;
/// returns the applied unit factor.
template <typename Derived>
typename Derived::Scalar fix_phase(Eigen::MatrixBase<Derived>&& v, RealOf<typename Derived::Scalar> floor) {
  using Scalar = typename Derived::Scalar;
  for (Index i = 0; i < v.size(); ++i) {
    const auto mag = std::abs(v(i));
    if (mag > floor) {
      const Scalar factor = Eigen::numext::conj(v(i)) / mag;
      v *= factor;
      return factor;
    }
  }
  return Scalar(1);
}

}  // namespace detail

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues, each
/// eigenvector phase-fixed so its first nonzero component is real positive.
template <typename Scalar>
Eigensystem<Scalar> eigh(const BasicHermitian<Scalar>& h, const Tolerances& tol = {}) {
  Eigensystem<Scalar> out;
  const Index n = h.dim();
  if (n == 0) {
    out.values.resize(0);
    out.vectors.resize(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericError("Hermitian eigensolver did not converge (dim " + std::to_string(n) + ")");
  }
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  for (Index k = 0; k < n; ++k) detail::fix_phase(out.vectors.col(k), RealOf<Scalar>(tol.orth));
  return out;
}

struct Cluster {
  double representative = 0;   // mean of the member eigenvalues
  std::vector<Index> indices;  // consecutive positions in the ascending list
};

/// Groups consecutive ascending values whose gap is ≤ τ_eig_cluster·scale.
template <typename Derived>
std::vector<Cluster> cluster_spectrum(const Eigen::MatrixBase<Derived>& values, double scale,
                                      const Tolerances& tol = {}) {
  std::vector<Cluster> clusters;
  const double threshold = tol.eig_cluster * (scale > 0 ? scale : 1.0);
  for (Index i = 0; i < values.size(); ++i) {
    if (clusters.empty() || static_cast<double>(values(i) - values(i - 1)) > threshold) {
      clusters.push_back({});
    }
    clusters.back().indices.push_back(i);
  }
  for (auto& c : clusters) {
    double sum = 0;
    for (Index i : c.indices) sum += static_cast<double>(values(i));
    c.representative = sum / static_cast<double>(c.indices.size());
  }
  return clusters;
}

/// Smallest distance between representatives of neighbouring clusters
/// (infinity when there are fewer than two clusters).
inline double min_cluster_gap(const std::vector<Cluster>& clusters) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    gap = std::min(gap, clusters[i].representative - clusters[i - 1].representative);
  }
  return gap;
}

/// Eigendecomposition together with its clustering at the operator's own scale.
template <typename Scalar>
struct SpectralResolution {
  Eigensystem<Scalar> eigen;
  std::vector<Cluster> clusters;

  /// Orthonormal eigenvectors spanning cluster `c`.
  DenseMatrix<Scalar> cluster_frame(std::size_t c) const {
    const auto& idx = clusters[c].indices;
    DenseMatrix<Scalar> f(eigen.vectors.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) f.col(static_cast<Index>(j)) = eigen.vectors.col(idx[j]);
    return f;
  }
};

template <typename Scalar>
SpectralResolution<Scalar> spectral_resolution(const BasicHermitian<Scalar>& h, const Tolerances& tol = {}) {
  SpectralResolution<Scalar> r;
  r.eigen = eigh(h, tol);
  double scale = 1.0;
  if (r.eigen.values.size() > 0) {
    scale = static_cast<double>(r.eigen.values.cwiseAbs().maxCoeff());
    if (!(scale > 0)) scale = 1.0;
  }
  r.clusters = cluster_spectrum(r.eigen.values, scale, tol);
  return r;
}

template <typename Scalar>
struct SingularSystem {
  DenseMatrix<Scalar> left;             // rows×rows unitary
  DenseVector<RealOf<Scalar>> values;   // descending, min(rows, cols) entries
  DenseMatrix<Scalar> right;            // cols×cols unitary
};

/// Full singular-value decomposition A = L·diag(σ)·R†, with the same phase
/// convention as `eigh` applied to each left singular vector.
template <typename Derived>
SingularSystem<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& a, const Tolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  SingularSystem<Scalar> out;
  if (!a.allFinite()) throw ValidationError("svd: matrix has non-finite entries");
  if (a.rows() == 0 || a.cols() == 0) {
    out.left = DenseMatrix<Scalar>::Identity(a.rows(), a.rows());
    out.right = DenseMatrix<Scalar>::Identity(a.cols(), a.cols());
    out.values.resize(0);
    return out;
  }
  DenseMatrix<Scalar> m = a;
  Eigen::BDCSVD<DenseMatrix<Scalar>> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success) throw NumericError("svd did not converge");
  out.left = solver.matrixU();
  out.values = solver.singularValues();
  out.right = solver.matrixV();
  const Index k = out.values.size();
  for (Index q = 0; q < out.left.cols(); ++q) {
    const Scalar factor = detail::fix_phase(out.left.col(q), RealOf<Scalar>(tol.orth));
    if (q < k) out.right.col(q) *= factor;
  }
  for (Index q = k; q < out.right.cols(); ++q) detail::fix_phase(out.right.col(q), RealOf<Scalar>(tol.orth));
  return out;
}

/// Number of singular values above τ_rank·σ_max.
template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& singular_values, const Tolerances& tol = {}) {
  if (singular_values.size() == 0) return 0;
  const auto top = singular_values.maxCoeff();
  if (!(top > 0)) return 0;
  Index r = 0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > tol.rank * top) ++r;
  }
  return r;
}

template <typename Derived>
Index matrix_rank(const Eigen::MatrixBase<Derived>& a, const Tolerances& tol = {}) {
  if (a.size() == 0) return 0;
  using Scalar = typename Derived::Scalar;
  DenseMatrix<Scalar> m = a;
  Eigen::BDCSVD<DenseMatrix<Scalar>> solver(m);
  return numerical_rank(solver.singularValues(), tol);
}

// ---------------------------------------------------------------------------
// Subspaces

template <typename Scalar>
class BasicSubspace {
 public:
  using Matrix = DenseMatrix<Scalar>;
  using Vector = DenseVector<Scalar>;

  BasicSubspace() = default;

  /// `frame` must have orthonormal columns within τ_orth.
  explicit BasicSubspace(Matrix frame, const Tolerances& tol = {}) : frame_(std::move(frame)) {
    if (frame_.cols() > frame_.rows()) throw ValidationError("subspace frame has more columns than rows");
    const auto defect = max_abs(frame_.adjoint() * frame_ - Matrix::Identity(frame_.cols(), frame_.cols()));
    if (defect > tol.orth) {
      std::ostringstream os;
      os << "subspace frame is not orthonormal: max |F^H F - I| = " << defect;
      throw ValidationError(os.str());
    }
  }

  static BasicSubspace zero(Index ambient) { return BasicSubspace(Matrix(ambient, 0)); }
  static BasicSubspace full(Index ambient) { return BasicSubspace(Matrix::Identity(ambient, ambient)); }

  Index ambient_dim() const noexcept { return frame_.rows(); }
  Index dim() const noexcept { return frame_.cols(); }
  bool empty() const noexcept { return frame_.cols() == 0; }
  const Matrix& frame() const noexcept { return frame_; }

  Matrix projector() const { return frame_ * frame_.adjoint(); }

 private:
  Matrix frame_ = Matrix(0, 0);
};

/// Rank-revealing Gram–Schmidt (two passes): a column is dropped when its
/// residual after projection is ≤ τ_rank·(largest input column norm).
template <typename Derived>
BasicSubspace<typename Derived::Scalar> orthonormal_basis(const Eigen::MatrixBase<Derived>& vectors,
                                                          const Tolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const Index n = vectors.rows();
  DenseMatrix<Scalar> q(n, std::min(n, vectors.cols()));
  Index k = 0;
  RealOf<Scalar> largest = 0;
  for (Index j = 0; j < vectors.cols(); ++j) largest = std::max(largest, vectors.col(j).norm());
  if (!(largest > 0)) return BasicSubspace<Scalar>::zero(n);
  const RealOf<Scalar> cut = RealOf<Scalar>(tol.rank) * largest;
  for (Index j = 0; j < vectors.cols() && k < n; ++j) {
    DenseVector<Scalar> v = vectors.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      if (k > 0) v -= q.leftCols(k) * (q.leftCols(k).adjoint() * v);
    }
    const auto r = v.norm();
    if (r > cut) q.col(k++) = v / r;
  }
  return BasicSubspace<Scalar>(q.leftCols(k));
}

template <typename Scalar>
void require_same_ambient(const BasicSubspace<Scalar>& s, const BasicSubspace<Scalar>& t, const char* op) {
  if (s.ambient_dim() != t.ambient_dim()) {
    throw ValidationError(std::string(op) + ": ambient dimension mismatch (" + std::to_string(s.ambient_dim()) +
                          " vs " + std::to_string(t.ambient_dim()) + ")");
  }
}

template <typename Scalar, typename Derived>
DenseMatrix<Scalar> project(const BasicSubspace<Scalar>& s, const Eigen::MatrixBase<Derived>& v) {
  if (v.rows() != s.ambient_dim()) throw ValidationError("project: ambient dimension mismatch");
  return s.frame() * (s.frame().adjoint() * v);
}

/// True when ‖v − P_S v‖ ≤ τ_residual·‖v‖ for every column v.
template <typename Scalar, typename Derived>
bool contains(const BasicSubspace<Scalar>& s, const Eigen::MatrixBase<Derived>& v, const Tolerances& tol = {}) {
  if (v.rows() != s.ambient_dim()) throw ValidationError("contains: ambient dimension mismatch");
  for (Index j = 0; j < v.cols(); ++j) {
    const auto norm = v.col(j).norm();
    const auto res = (v.col(j) - s.frame() * (s.frame().adjoint() * v.col(j))).norm();
    if (res > RealOf<Scalar>(tol.residual) * norm) return false;
  }
  return true;
}

template <typename Scalar>
bool contains(const BasicSubspace<Scalar>& s, const BasicSubspace<Scalar>& t, const Tolerances& tol = {}) {
  require_same_ambient(s, t, "contains");
  return contains(s, t.frame(), tol);
}

template <typename Scalar>
bool same_span(const BasicSubspace<Scalar>& s, const BasicSubspace<Scalar>& t, const Tolerances& tol = {}) {
  return s.ambient_dim() == t.ambient_dim() && s.dim() == t.dim() && contains(s, t, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> sum(const BasicSubspace<Scalar>& s, const BasicSubspace<Scalar>& t,
                          const Tolerances& tol = {}) {
  require_same_ambient(s, t, "sum");
  DenseMatrix<Scalar> both(s.ambient_dim(), s.dim() + t.dim());
  both << s.frame(), t.frame();
  return orthonormal_basis(both, tol);
}

/// Orthogonal complement of `s` inside `ambient` (requires s ⊆ ambient).
template <typename Scalar>
BasicSubspace<Scalar> complement_within(const BasicSubspace<Scalar>& ambient, const BasicSubspace<Scalar>& s,
                                        const Tolerances& tol = {}) {
  require_same_ambient(ambient, s, "complement_within");
  if (!contains(ambient, s, tol)) throw ValidationError("complement_within: subspace is not inside the ambient subspace");
  if (s.dim() == 0) return ambient;
  if (s.dim() >= ambient.dim()) return BasicSubspace<Scalar>::zero(ambient.ambient_dim());
  // Coordinates of s in the ambient frame; its unused left singular vectors
  // complete the basis.
  const DenseMatrix<Scalar> coords = ambient.frame().adjoint() * s.frame();
  const auto sv = svd(coords, tol);
  const Index rest = ambient.dim() - s.dim();
  DenseMatrix<Scalar> frame = ambient.frame() * sv.left.rightCols(rest);
  return BasicSubspace<Scalar>(frame);
}

template <typename Scalar>
BasicSubspace<Scalar> complement(const BasicSubspace<Scalar>& s, const Tolerances& tol = {}) {
  return complement_within(BasicSubspace<Scalar>::full(s.ambient_dim()), s, tol);
}

/// S ∩ T: null space of (I − P_T)·F_S, whose singular values are the sines of
/// the principal angles; angles with sine ≤ τ_residual count as shared.
template <typename Scalar>
BasicSubspace<Scalar> intersect(const BasicSubspace<Scalar>& s, const BasicSubspace<Scalar>& t,
                                const Tolerances& tol = {}) {
  require_same_ambient(s, t, "intersect");
  if (s.dim() == 0 || t.dim() == 0) return BasicSubspace<Scalar>::zero(s.ambient_dim());
  const DenseMatrix<Scalar> outside = s.frame() - t.frame() * (t.frame().adjoint() * s.frame());
  const auto sv = svd(outside, tol);
  std::vector<Index> keep;
  for (Index i = 0; i < s.dim(); ++i) {
    const RealOf<Scalar> sigma = i < sv.values.size() ? sv.values(i) : RealOf<Scalar>(0);
    if (sigma <= RealOf<Scalar>(tol.residual)) keep.push_back(i);
  }
  DenseMatrix<Scalar> coords(s.dim(), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) coords.col(static_cast<Index>(j)) = sv.right.col(keep[j]);
  return orthonormal_basis(DenseMatrix<Scalar>(s.frame() * coords), tol);
}

/// ‖(I − P_S)·H·F_S‖₂: zero exactly when S is H-invariant.
template <typename Scalar>
RealOf<Scalar> invariance_residual(const DenseMatrix<Scalar>& h, const BasicSubspace<Scalar>& s) {
  if (s.dim() == 0) return 0;
  const DenseMatrix<Scalar> image = h * s.frame();
  return operator_norm(DenseMatrix<Scalar>(image - s.frame() * (s.frame().adjoint() * image)));
}

/// Compression F†·H·F of `h` to `s`.
template <typename Scalar>
BasicHermitian<Scalar> compress(const BasicHermitian<Scalar>& h, const BasicSubspace<Scalar>& s,
                                const Tolerances& tol = {}) {
  if (h.dim() != s.ambient_dim()) throw ValidationError("compress: ambient dimension mismatch");
  return BasicHermitian<Scalar>(DenseMatrix<Scalar>(s.frame().adjoint() * h.matrix() * s.frame()), tol);
}

/// Principal square root of a positive semidefinite operator; eigenvalues in
/// [−τ_residual·‖K‖, 0) are clamped to zero.
template <typename Scalar>
BasicHermitian<Scalar> principal_sqrt_psd(const BasicHermitian<Scalar>& k, const Tolerances& tol = {}) {
  if (k.dim() == 0) return k;
  const auto es = eigh(k, tol);
  const double scale = static_cast<double>(std::max(es.values.cwiseAbs().maxCoeff(), RealOf<Scalar>(0)));
  const double floor = -tol.residual * (scale > 0 ? scale : 1.0);
  DenseVector<RealOf<Scalar>> root(es.values.size());
  for (Index i = 0; i < es.values.size(); ++i) {
    const double lambda = static_cast<double>(es.values(i));
    if (lambda < floor) {
      std::ostringstream os;
      os << "operator is not positive semidefinite: eigenvalue " << lambda;
      throw PreconditionError(os.str());
    }
    root(i) = RealOf<Scalar>(std::sqrt(std::max(lambda, 0.0)));
  }
  DenseMatrix<Scalar> s = es.vectors * root.template cast<Scalar>().asDiagonal() * es.vectors.adjoint();
  return BasicHermitian<Scalar>(s, tol);
}

// ---------------------------------------------------------------------------
// Library-wide aliases

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using HermitianOperator = BasicHermitian<Complex>;
using RealSymmetric = BasicHermitian<double>;
using Subspace = BasicSubspace<Complex>;

}  // namespace openext
