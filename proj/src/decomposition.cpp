#include "openext/decomposition.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace openext {

namespace {

Matrix side_rows(const Subspace& s, Index offset, Index count) { return s.frame().middleRows(offset, count); }

Matrix concat(const std::vector<const Matrix*>& blocks, Index rows) {
  Index cols = 0;
  for (const auto* b : blocks) cols += b->cols();
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto* b : blocks) {
    out.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return out;
}

double scale_of(const HermitianOperator& op) {
  return op.dim() ? static_cast<double>(norm_scale(op.matrix())) : 1.0;
}

}  // namespace

Subspace orbit(const HermitianOperator& op, const Subspace& seed, const Tolerances& tol) {
  if (seed.ambient_dim() != op.dim()) throw ValidationError("orbit: seed ambient dimension does not match operator");
  if (seed.empty()) return Subspace::zero(op.dim());
  const auto res = spectral_resolution(op, tol);
  Matrix pieces(op.dim(), 0);
  for (std::size_t c = 0; c < res.clusters.size(); ++c) {
    const Matrix f = res.cluster_frame(c);
    const Matrix projected = f * (f.adjoint() * seed.frame());
    pieces.conservativeResize(Eigen::NoChange, pieces.cols() + projected.cols());
    pieces.rightCols(projected.cols()) = projected;
  }
  return orthonormal_basis(pieces, tol);
}

CoupledParts coupled_parts(const ConservativeSystem& system, const Tolerances& tol) {
  const Index n1 = system.n1();
  const Index n2 = system.n2();
  const Matrix gamma = system.gamma();
  const auto omega1 = system.omega1();
  const auto omega2 = system.omega2();

  const Subspace ran_gamma = n2 ? orthonormal_basis(gamma, tol) : Subspace::zero(n1);
  const Subspace ran_gamma_adj = n1 ? orthonormal_basis(Matrix(gamma.adjoint()), tol) : Subspace::zero(n2);
  const Subspace c1 = orbit(omega1, ran_gamma, tol);
  const Subspace c2 = orbit(omega2, ran_gamma_adj, tol);
  const Subspace d1 = complement(c1, tol);
  const Subspace d2 = complement(c2, tol);

  CoupledParts parts;
  parts.h1c = Subspace(system.embed_observable(c1.frame()));
  parts.h1d = Subspace(system.embed_observable(d1.frame()));
  parts.h2c = Subspace(system.embed_hidden(c2.frame()));
  parts.h2d = Subspace(system.embed_hidden(d2.frame()));
  parts.min_gap_omega1 = min_cluster_gap(spectral_resolution(omega1, tol).clusters);
  parts.min_gap_omega2 = min_cluster_gap(spectral_resolution(omega2, tol).clusters);
  parts.residual = four_block_residual(system, parts);
  return parts;
}

double four_block_residual(const ConservativeSystem& system, const CoupledParts& parts) {
  const std::vector<const Subspace*> order{&parts.h1d, &parts.h1c, &parts.h2c, &parts.h2d};
  Index total = 0;
  for (const auto* s : order) {
    if (s->ambient_dim() != system.dim()) throw ValidationError("four_block_residual: parts live in the wrong space");
    total += s->dim();
  }
  if (total != system.dim()) throw ValidationError("four_block_residual: parts do not add up to the state space");
  std::vector<Matrix> frames;
  for (const auto* s : order) frames.push_back(s->frame());
  const Matrix basis = concat({&frames[0], &frames[1], &frames[2], &frames[3]}, system.dim());
  const Matrix rotated = basis.adjoint() * system.omega().matrix() * basis;

  // Blocks allowed to be nonzero: the diagonal plus the (h1c, h2c) coupling pair.
  const auto allowed = [](int a, int b) { return a == b || (a == 1 && b == 2) || (a == 2 && b == 1); };
  std::array<Index, 5> offsets{0, 0, 0, 0, 0};
  for (int a = 0; a < 4; ++a) offsets[a + 1] = offsets[a] + order[a]->dim();
  double worst = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (allowed(a, b) || order[a]->dim() == 0 || order[b]->dim() == 0) continue;
      const Matrix block = rotated.block(offsets[a], offsets[b], order[a]->dim(), order[b]->dim());
      worst = std::max(worst, static_cast<double>(operator_norm(block)));
    }
  }
  return worst;
}

ConservativeSystem restrict_system(const ConservativeSystem& system, const Matrix& frame1, const Matrix& frame2,
                                   const Tolerances& tol) {
  Matrix f1 = system.embed_observable(frame1);
  Matrix f2 = system.embed_hidden(frame2);
  const Subspace s(concat({&f1, &f2}, system.dim()), tol);
  const double residual = invariance_residual(system.omega().matrix(), s);
  if (residual > tol.residual * scale_of(system.omega())) {
    std::ostringstream os;
    os << "restriction target is not invariant under Omega (residual " << residual << ")";
    throw PreconditionError(os.str());
  }
  return ConservativeSystem::from_matrix(compress(system.omega(), s, tol).matrix(), frame1.cols(), tol);
}

ConservativeSystem minimal_subsystem(const ConservativeSystem& system, const Tolerances& tol) {
  const auto parts = coupled_parts(system, tol);
  return restrict_system(system, Matrix::Identity(system.n1(), system.n1()),
                         side_rows(parts.h2c, system.n1(), system.n2()), tol);
}

ConservativeSystem reconstructible_core(const ConservativeSystem& system, const Tolerances& tol) {
  const auto parts = coupled_parts(system, tol);
  return restrict_system(system, side_rows(parts.h1c, 0, system.n1()),
                         side_rows(parts.h2c, system.n1(), system.n2()), tol);
}

MultiplicityReport multiplicity(const HermitianOperator& op, const Subspace& invariant_subspace,
                                const Tolerances& tol) {
  if (invariant_subspace.ambient_dim() != op.dim()) throw ValidationError("multiplicity: ambient dimension mismatch");
  MultiplicityReport report;
  const double scale = scale_of(op);
  report.invariance_residual = invariance_residual(op.matrix(), invariant_subspace);
  if (report.invariance_residual > tol.residual * scale) {
    std::ostringstream os;
    os << "multiplicity: subspace is not invariant (residual " << report.invariance_residual << ")";
    throw PreconditionError(os.str());
  }
  const auto values = eigh(compress(op, invariant_subspace, tol), tol).values;
  const auto clusters = cluster_spectrum(values, scale, tol);
  for (const auto& c : clusters) {
    const auto m = static_cast<Index>(c.indices.size());
    report.per_cluster.push_back({c.representative, m});
    report.max_mult = std::max(report.max_mult, m);
  }
  report.min_gap = min_cluster_gap(clusters);
  return report;
}

MultiplicityBoundReport check_multiplicity_bounds(const ConservativeSystem& system, const Tolerances& tol) {
  MultiplicityBoundReport r;
  const Index n1 = system.n1();
  const Index n2 = system.n2();
  r.rank_gamma = numerical_rank(svd(system.gamma(), tol).values, tol);
  const auto parts = coupled_parts(system, tol);
  r.dim_h1c = parts.h1c.dim();

  const Subspace h_min = orbit(system.omega(), system.observable_space(), tol);
  r.dim_h_min = h_min.dim();
  r.h_min_identity = same_span(h_min, sum(system.observable_space(), parts.h2c, tol), tol);

  r.omega_on_h_min = multiplicity(system.omega(), h_min, tol);
  r.omega1_on_h1c = multiplicity(system.omega1(), Subspace(side_rows(parts.h1c, 0, n1)), tol);
  r.omega2_on_h2c = multiplicity(system.omega2(), Subspace(side_rows(parts.h2c, n1, n2)), tol);

  r.checks.push_back({"mult(Omega|H_min) <= dim H1", r.omega_on_h_min.max_mult, n1, true});
  r.checks.push_back({"mult(Omega|H_min) <= 2 rank Gamma", r.omega_on_h_min.max_mult, 2 * r.rank_gamma,
                      r.dim_h1c == n1});
  r.checks.push_back({"mult(Omega1|H1c) <= rank Gamma", r.omega1_on_h1c.max_mult, r.rank_gamma, true});
  r.checks.push_back({"mult(Omega2|H2c) <= rank Gamma", r.omega2_on_h2c.max_mult, r.rank_gamma, true});
  for (const auto& c : r.checks) {
    if (!c.satisfied()) {
      r.violations.push_back(c.name + ": " + std::to_string(c.value) + " > " + std::to_string(c.bound));
    }
  }
  if (!r.h_min_identity) r.violations.push_back("O_Omega(H1) differs from H1 + H2c");
  return r;
}

StringDecomposition string_decomposition(const ConservativeSystem& system, const Tolerances& tol) {
  StringDecomposition out;
  const Index n1 = system.n1();
  const Index n2 = system.n2();
  const auto parts = coupled_parts(system, tol);
  if (parts.h2c.empty()) return out;

  const Matrix f = side_rows(parts.h2c, n1, n2);
  const auto omega2 = system.omega2();
  const Subspace h2c_local(f);
  const double residual = invariance_residual(omega2.matrix(), h2c_local);
  if (residual > tol.residual * scale_of(omega2)) throw NumericError("string_decomposition: H2c is not invariant");
  const auto compressed = compress(omega2, h2c_local, tol);
  const auto es = eigh(compressed, tol);
  const auto clusters = cluster_spectrum(es.values, scale_of(omega2), tol);

  const Matrix gf = system.gamma() * f;
  const Matrix coupling = gf.adjoint() * gf;

  // Per cluster: eigenvectors (in H₂c coordinates) sorted by decreasing weight.
  struct Refined {
    double eigenvalue;
    Matrix vectors;
    RealVector weights;
  };
  std::vector<Refined> refined;
  std::size_t depth = 0;
  for (const auto& c : clusters) {
    Matrix e(f.cols(), static_cast<Index>(c.indices.size()));
    for (std::size_t j = 0; j < c.indices.size(); ++j) e.col(static_cast<Index>(j)) = es.vectors.col(c.indices[j]);
    const auto inner = eigh(HermitianOperator(Matrix(e.adjoint() * coupling * e)), tol);
    const Index m = e.cols();
    Refined r{c.representative, Matrix(f.cols(), m), RealVector(m)};
    for (Index j = 0; j < m; ++j) {
      r.vectors.col(j) = e * inner.vectors.col(m - 1 - j);
      r.weights(j) = std::max(inner.values(m - 1 - j), 0.0);
    }
    depth = std::max(depth, static_cast<std::size_t>(m));
    refined.push_back(std::move(r));
  }

  for (std::size_t j = 0; j < depth; ++j) {
    Matrix cols(f.cols(), 0);
    std::vector<SpectralWeight> content;
    for (const auto& r : refined) {
      if (static_cast<std::size_t>(r.vectors.cols()) <= j) continue;
      cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
      cols.rightCols(1) = r.vectors.col(static_cast<Index>(j));
      content.push_back({r.eigenvalue, r.weights(static_cast<Index>(j))});
    }
    out.strings.emplace_back(system.embed_hidden(Matrix(f * cols)), tol);
    out.measures.push_back(std::move(content));
  }
  return out;
}

ReconstructibilityReport is_reconstructible(const ConservativeSystem& system, const Tolerances& tol) {
  ReconstructibilityReport report;
  const auto parts = coupled_parts(system, tol);
  report.decoupled_parts_trivial = parts.h1d.empty() && parts.h2d.empty();

  const Matrix off = system.off_diagonal_part().matrix();
  const double gamma_norm = operator_norm(system.gamma());
  const auto res = spectral_resolution(system.omega(), tol);
  for (std::size_t c = 0; c < res.clusters.size(); ++c) {
    const Matrix f = res.cluster_frame(c);
    const auto sv = svd(Matrix(off * f), tol);
    Index rank = 0;
    for (Index i = 0; i < sv.values.size(); ++i) {
      if (gamma_norm > 0 && sv.values(i) > tol.rank * gamma_norm) ++rank;
    }
    if (rank < f.cols()) {
      report.reconstructible = false;
      report.witness_eigenvalue = res.clusters[c].representative;
      // Right singular vectors past the rank span Null(Γ̊) within the cluster.
      report.witness = f * sv.right.col(rank);
      detail::fix_phase(report.witness.col(0), tol.orth);
      break;
    }
  }
  return report;
}

}  // namespace openext
