#include "openext/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "openext/decomposition.hpp"
#include "openext/extension.hpp"

namespace openext {

namespace {

Matrix column(const Matrix& m, Index q) { return m.col(q); }

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

Subspace full_space(const ConservativeSystem& system, const Subspace& h1, const Subspace& h2, const Tolerances& tol) {
  Matrix f(system.dim(), h1.dim() + h2.dim());
  f << system.embed_observable(h1.frame()), system.embed_hidden(h2.frame());
  return Subspace(f, tol);
}

double scale_of(const Matrix& m) { return m.size() ? static_cast<double>(norm_scale(m)) : 1.0; }

}  // namespace

ChannelSet channels(const ConservativeSystem& system, const Tolerances& tol) {
  ChannelSet out;
  const Matrix gamma = system.gamma();
  const auto sv = svd(gamma, tol);
  out.rank = numerical_rank(sv.values, tol);
  out.gammas = sv.values.head(out.rank).cwiseAbs2();
  out.g = sv.left.leftCols(out.rank);
  out.g_prime = sv.right.leftCols(out.rank);
  if (out.rank > 0) {
    RealVector ascending = out.gammas.reverse();
    for (const auto& c : cluster_spectrum(ascending, out.gammas(0), tol)) {
      if (c.indices.size() < 2) continue;
      std::vector<Index> group;
      for (Index i : c.indices) group.push_back(out.rank - 1 - i);
      std::sort(group.begin(), group.end());
      out.degenerate_groups.push_back(std::move(group));
    }
    std::sort(out.degenerate_groups.begin(), out.degenerate_groups.end());
  }
  return out;
}

CouplingMatrix coupling_matrix(const ConservativeSystem& system, const BlockPartition& partition1,
                               const BlockPartition& partition2, const Tolerances& tol) {
  if (partition1.side() != 1 || partition1.side_dim() != system.n1()) {
    throw ValidationError("coupling_matrix: first partition must partition H1");
  }
  if (partition2.side() != 2 || partition2.side_dim() != system.n2()) {
    throw ValidationError("coupling_matrix: second partition must partition H2");
  }
  const Matrix gamma = system.gamma();
  const double gamma_norm = operator_norm(gamma);
  const auto& p1 = partition1.parts();
  const auto& p2 = partition2.parts();
  CouplingMatrix out;
  out.ranks = Eigen::MatrixXi::Zero(static_cast<Index>(p1.size()), static_cast<Index>(p2.size()));
  for (std::size_t a = 0; a < p1.size(); ++a) {
    for (std::size_t b = 0; b < p2.size(); ++b) {
      const Matrix block = p1[a].frame().adjoint() * gamma * p2[b].frame();
      if (block.size() == 0 || !(gamma_norm > 0)) continue;
      const auto sv = svd(block, tol);
      int rank = 0;
      for (Index i = 0; i < sv.values.size(); ++i) {
        if (sv.values(i) > tol.rank * gamma_norm) ++rank;
      }
      out.ranks(static_cast<Index>(a), static_cast<Index>(b)) = rank;
    }
  }
  for (Index a = 0; a < out.ranks.rows(); ++a) {
    if (out.ranks.row(a).sum() == 0) out.zero_rows.push_back(a);
  }
  for (Index b = 0; b < out.ranks.cols(); ++b) {
    if (out.ranks.col(b).sum() == 0) out.zero_cols.push_back(b);
  }
  return out;
}

SInvarianceReport is_s_invariant(const ConservativeSystem& system, const Subspace& h_sub, const Tolerances& tol) {
  if (h_sub.ambient_dim() != system.dim()) throw ValidationError("is_s_invariant: subspace must live in H1 + H2");
  const Matrix p = h_sub.projector();
  const Matrix& omega = system.omega().matrix();
  Matrix p1 = Matrix::Zero(system.dim(), system.dim());
  p1.topLeftCorner(system.n1(), system.n1()).setIdentity();
  SInvarianceReport r;
  r.omega_commutator = operator_norm(Matrix(p * omega - omega * p));
  r.projection_commutator = operator_norm(Matrix(p * p1 - p1 * p));
  r.verdict = r.omega_commutator <= tol.residual * scale_of(omega) && r.projection_commutator <= tol.residual;
  return r;
}

std::size_t SInvariantDecomposition::coupled_count() const {
  return static_cast<std::size_t>(
      std::count_if(components.begin(), components.end(), [](const auto& c) { return !c.decoupled; }));
}

SInvariantDecomposition canonical_decomposition(const ConservativeSystem& system, const Tolerances& tol) {
  SInvariantDecomposition out;
  out.channel_set = channels(system, tol);
  const auto& ch = out.channel_set;
  const auto omega1 = system.omega1();
  const auto omega2 = system.omega2();
  const auto r = static_cast<std::size_t>(ch.rank);

  std::vector<Subspace> orbits1, orbits2;
  for (std::size_t q = 0; q < r; ++q) {
    orbits1.push_back(orbit(omega1, Subspace(column(ch.g, static_cast<Index>(q))), tol));
    orbits2.push_back(orbit(omega2, Subspace(column(ch.g_prime, static_cast<Index>(q))), tol));
  }
  DisjointSets sets(r);
  for (std::size_t p = 0; p < r; ++p) {
    for (std::size_t q = 0; q < r; ++q) {
      if (p == q) continue;
      const double leak1 = project(orbits1[p], ch.g.col(static_cast<Index>(q))).norm();
      const double leak2 = project(orbits2[p], ch.g_prime.col(static_cast<Index>(q))).norm();
      if (leak1 > tol.residual || leak2 > tol.residual) {
        if (p < q) out.edges.emplace_back(static_cast<Index>(p), static_cast<Index>(q));
        sets.unite(p, q);
      }
    }
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());

  out.assignment.assign(r, -1);
  std::vector<std::size_t> root_to_component;
  std::vector<std::size_t> roots;
  for (std::size_t q = 0; q < r; ++q) {
    const std::size_t root = sets.find(q);
    auto it = std::find(roots.begin(), roots.end(), root);
    if (it == roots.end()) {
      roots.push_back(root);
      out.components.push_back({});
      it = roots.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - roots.begin());
    out.assignment[q] = static_cast<Index>(idx);
    out.components[idx].channels.push_back(static_cast<Index>(q));
  }
  for (auto& comp : out.components) {
    Matrix g(system.n1(), static_cast<Index>(comp.channels.size()));
    Matrix gp(system.n2(), static_cast<Index>(comp.channels.size()));
    for (std::size_t j = 0; j < comp.channels.size(); ++j) {
      g.col(static_cast<Index>(j)) = ch.g.col(comp.channels[j]);
      gp.col(static_cast<Index>(j)) = ch.g_prime.col(comp.channels[j]);
    }
    comp.h1 = orbit(omega1, orthonormal_basis(g, tol), tol);
    comp.h2 = orbit(omega2, orthonormal_basis(gp, tol), tol);
  }

  // Decoupled remainders, attached as explicit components.
  const auto parts = coupled_parts(system, tol);
  if (!parts.h1d.empty()) {
    SInvariantComponent c;
    c.h1 = Subspace(Matrix(parts.h1d.frame().topRows(system.n1())));
    c.h2 = Subspace::zero(system.n2());
    c.decoupled = true;
    out.components.push_back(std::move(c));
  }
  if (!parts.h2d.empty()) {
    SInvariantComponent c;
    c.h1 = Subspace::zero(system.n1());
    c.h2 = Subspace(Matrix(parts.h2d.frame().bottomRows(system.n2())));
    c.decoupled = true;
    out.components.push_back(std::move(c));
  }

  std::vector<Matrix> frames;
  Index total = 0;
  for (auto& comp : out.components) {
    const Subspace full = full_space(system, comp.h1, comp.h2, tol);
    comp.invariance = is_s_invariant(system, full, tol);
    frames.push_back(full.frame());
    total += full.dim();
  }
  Matrix basis(system.dim(), total);
  std::vector<Index> offsets{0};
  for (const auto& f : frames) {
    basis.middleCols(offsets.back(), f.cols()) = f;
    offsets.push_back(offsets.back() + f.cols());
  }
  const Matrix rotated = basis.adjoint() * system.omega().matrix() * basis;
  for (std::size_t a = 0; a < frames.size(); ++a) {
    for (std::size_t b = 0; b < frames.size(); ++b) {
      if (a == b || frames[a].cols() == 0 || frames[b].cols() == 0) continue;
      out.block_residual = std::max(
          out.block_residual,
          static_cast<double>(operator_norm(Matrix(rotated.block(offsets[a], offsets[b], frames[a].cols(), frames[b].cols())))));
    }
  }
  return out;
}

std::vector<double> decoupling_time_grid(const ConservativeSystem& system, const Tolerances& tol) {
  double gap = min_cluster_gap(spectral_resolution(system.omega2(), tol).clusters);
  if (!std::isfinite(gap) || !(gap > 0)) gap = 1.0;
  return linspace(0.0, 2.0 * std::numbers::pi / gap, 25);
}

DecouplingReport decoupling_report(const ConservativeSystem& system, const Subspace& h1_sub, const Tolerances& tol) {
  if (h1_sub.ambient_dim() != system.n1()) throw ValidationError("decoupling_report: subspace must live in H1");
  DecouplingReport r;
  r.times = decoupling_time_grid(system, tol);
  const Matrix inside = h1_sub.projector();
  const Matrix outside = Matrix::Identity(system.n1(), system.n1()) - inside;
  const Matrix omega1 = system.omega1().matrix();
  r.omega_block = operator_norm(Matrix(inside * omega1 * outside));
  r.reverse_omega_block = operator_norm(Matrix(outside * omega1 * inside));
  const auto kernel = kernel_eval(system, r.times, tol);
  for (const auto& a : kernel.values) {
    r.kernel_block = std::max(r.kernel_block, static_cast<double>(operator_norm(Matrix(inside * a * outside))));
    r.reverse_kernel_block = std::max(r.reverse_kernel_block, static_cast<double>(operator_norm(Matrix(outside * a * inside))));
  }
  const double omega_tol = tol.residual * scale_of(omega1);
  const double kernel_tol = tol.residual * (kernel.values.empty() ? 1.0 : scale_of(kernel.values.front()));
  r.decoupled = r.omega_block <= omega_tol && r.kernel_block <= kernel_tol;
  r.reciprocal = r.reverse_omega_block <= omega_tol && r.reverse_kernel_block <= kernel_tol;
  if (r.decoupled) {
    SInvariantComponent c;
    c.h1 = h1_sub;
    const Matrix image = system.gamma().adjoint() * h1_sub.frame();
    c.h2 = orbit(system.omega2(), orthonormal_basis(image, tol), tol);
    c.invariance = is_s_invariant(system, full_space(system, c.h1, c.h2, tol), tol);
    r.splitting = std::move(c);
  }
  return r;
}

}  // namespace openext
