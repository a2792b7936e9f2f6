#include "openext/hamiltonian.hpp"

#include <cmath>
#include <sstream>

namespace openext {

namespace {

RealMatrix outer_sum(const std::vector<RealVector>& a, const std::vector<RealVector>& b) {
  RealMatrix out = RealMatrix::Zero(a.empty() ? 0 : a.front().size(), b.empty() ? 0 : b.front().size());
  for (std::size_t j = 0; j < a.size(); ++j) out += a[j] * b[j].transpose();
  return out;
}

void require_length(const std::vector<RealVector>& vs, Index n, const char* what) {
  for (std::size_t j = 0; j < vs.size(); ++j) {
    if (vs[j].size() != n) {
      throw ValidationError(std::string(what) + " " + std::to_string(j) + " has length " +
                            std::to_string(vs[j].size()) + ", expected " + std::to_string(n));
    }
  }
}

/// Orthonormal basis of the orthogonal complement of span(gammas) in R^n.
RealMatrix complement_of_span(const std::vector<RealVector>& gammas, Index n, const Tolerances& tol) {
  if (gammas.empty()) return RealMatrix::Identity(n, n);
  RealMatrix g(n, static_cast<Index>(gammas.size()));
  for (std::size_t j = 0; j < gammas.size(); ++j) g.col(static_cast<Index>(j)) = gammas[j];
  const auto sv = svd(g, tol);
  const Index rank = numerical_rank(sv.values, tol);
  return sv.left.rightCols(n - rank);
}

}  // namespace

QuadraticHamiltonian::QuadraticHamiltonian(RealVector mass, RealMatrix stiffness, std::vector<DofLabel> labels,
                                           const Tolerances& tol)
    : mass_(std::move(mass)), stiffness_(std::move(stiffness)), labels_(std::move(labels)) {
  const Index n = mass_.size();
  if (stiffness_.rows() != n || stiffness_.cols() != n) throw ValidationError("stiffness shape does not match mass");
  if (!labels_.empty() && static_cast<Index>(labels_.size()) != n) throw ValidationError("label count does not match DOFs");
  if (!mass_.allFinite() || !stiffness_.allFinite()) throw ValidationError("Hamiltonian has non-finite entries");
  if (n && !(mass_.minCoeff() > 0)) throw ValidationError("masses must be positive");
  const RealSymmetric k(stiffness_, tol);
  stiffness_ = k.matrix();
  if (n) {
    const auto values = eigh(k, tol).values;
    const double scale = std::max(values.cwiseAbs().maxCoeff(), 0.0);
    if (values.minCoeff() < -tol.residual * (scale > 0 ? scale : 1.0)) {
      std::ostringstream os;
      os << "stiffness is not positive semidefinite: min eigenvalue " << values.minCoeff();
      throw PreconditionError(os.str());
    }
  }
  if (labels_.empty()) {
    for (Index i = 0; i < n; ++i) labels_.push_back({{}, static_cast<int>(i)});
  }
}

FrequencyOperator frequency_operator(const QuadraticHamiltonian& h, const Tolerances& tol) {
  const RealVector inv_sqrt_m = h.mass().cwiseSqrt().cwiseInverse();
  const RealMatrix w = inv_sqrt_m.asDiagonal() * h.stiffness() * inv_sqrt_m.asDiagonal();
  const RealSymmetric ws(w, tol);
  const auto root = principal_sqrt_psd(ws, tol);
  FrequencyOperator out;
  out.omega = HermitianOperator(Matrix(root.matrix().cast<Complex>()), tol);
  if (h.dofs()) {
    const auto values = eigh(ws, tol).values;
    const double scale = values.cwiseAbs().maxCoeff();
    out.zero_modes = values.minCoeff() <= tol.rank * (scale > 0 ? scale : 1.0);
  }
  return out;
}

Index coupling_span_dim(const std::vector<RealVector>& gammas, Index n, const Tolerances& tol) {
  return n - complement_of_span(gammas, n, tol).cols();
}

ConservativeSystem oscillator_system(const OscillatorSpec& spec, const QuadraticHamiltonian& hidden,
                                     const Tolerances& tol) {
  const Index n = spec.n;
  const Index g = hidden.dofs();
  if (spec.gamma1.size() != spec.gamma2.size()) throw ValidationError("gamma1 and gamma2 must have the same count J");
  require_length(spec.gamma1, n, "gamma1");
  require_length(spec.gamma2, g, "gamma2");
  if (!(spec.mass > 0) || !(spec.stiffness > 0)) throw ValidationError("mass and stiffness must be positive");

  RealMatrix k = RealMatrix::Zero(n + g, n + g);
  k.topLeftCorner(n, n) = spec.stiffness * RealMatrix::Identity(n, n);
  k.bottomRightCorner(g, g) = hidden.stiffness();
  if (!spec.gamma1.empty()) {
    k.topLeftCorner(n, n) += 2.0 * outer_sum(spec.gamma1, spec.gamma1);
    k.topRightCorner(n, g) -= 2.0 * outer_sum(spec.gamma1, spec.gamma2);
    k.bottomLeftCorner(g, n) -= 2.0 * outer_sum(spec.gamma2, spec.gamma1);
    k.bottomRightCorner(g, g) += 2.0 * outer_sum(spec.gamma2, spec.gamma2);
  }
  RealVector mass(n + g);
  mass << RealVector::Constant(n, spec.mass), hidden.mass();
  const auto op = frequency_operator(QuadraticHamiltonian(mass, k, {}, tol), tol);
  return ConservativeSystem::from_matrix(op.omega.matrix(), n, tol);
}

Index LatticeSpec::volume() const {
  Index v = 1;
  for (int i = 0; i < d; ++i) v *= 2 * L + 1;
  return v;
}

void LatticeSpec::validate(Index budget) const {
  if (d < 1) throw ValidationError("lattice dimension d must be >= 1");
  if (L < 0) throw ValidationError("lattice half-width L must be >= 0");
  if (n < 1) throw ValidationError("lattice needs at least one DOF per site");
  if (gammas.empty()) throw ValidationError("lattice needs at least one coupling vector (J >= 1)");
  if (!(mass > 0) || !(stiffness > 0)) throw ValidationError("mass and stiffness must be positive");
  require_length(gammas, n, "gamma");
  for (std::size_t j = 0; j < gammas.size(); ++j) {
    if (!(gammas[j].norm() > 0)) throw ValidationError("gamma " + std::to_string(j) + " is zero");
  }
  // Overflow-safe size check.
  double total = static_cast<double>(n);
  for (int i = 0; i < d; ++i) total *= 2.0 * L + 1;
  if (total > static_cast<double>(budget)) {
    throw PreconditionError("lattice dimension " + std::to_string(static_cast<long long>(total)) +
                            " exceeds budget " + std::to_string(budget));
  }
}

LatticeModel lattice_system(const LatticeSpec& spec, Index budget, const Tolerances& tol) {
  spec.validate(budget);
  const Index volume = spec.volume();
  const Index side = 2 * spec.L + 1;
  std::vector<std::vector<int>> sites;
  sites.reserve(static_cast<std::size_t>(volume));
  for (Index s = 0; s < volume; ++s) {
    std::vector<int> coords(static_cast<std::size_t>(spec.d));
    Index rest = s;
    for (int i = spec.d - 1; i >= 0; --i) {
      coords[static_cast<std::size_t>(i)] = static_cast<int>(rest % side) - spec.L;
      rest /= side;
    }
    sites.push_back(std::move(coords));
  }
  // Site index of n + e_i, or −1 outside the cube.
  const auto forward = [&](Index s, int axis) -> Index {
    const int c = sites[static_cast<std::size_t>(s)][static_cast<std::size_t>(axis)];
    if (c == spec.L) return -1;
    Index stride = 1;
    for (int i = spec.d - 1; i > axis; --i) stride *= side;
    return s + stride;
  };

  RealMatrix b = RealMatrix::Zero(volume, volume);
  for (Index s = 0; s < volume; ++s) {
    for (int axis = 0; axis < spec.d; ++axis) {
      const Index t = forward(s, axis);
      b(s, s) += 1;
      if (t >= 0) {
        b(t, t) += 1;
        b(s, t) -= 1;
        b(t, s) -= 1;
      }
    }
  }
  const Index n = spec.n;
  RealMatrix coupling = RealMatrix::Zero(n, n);
  for (const auto& g : spec.gammas) coupling += g * g.transpose();
  RealMatrix k = spec.stiffness * RealMatrix::Identity(volume * n, volume * n);
  for (Index s = 0; s < volume; ++s) {
    for (Index t = 0; t < volume; ++t) {
      if (b(s, t) != 0) k.block(s * n, t * n, n, n) += 2.0 * b(s, t) * coupling;
    }
  }

  std::vector<DofLabel> labels;
  for (const auto& site : sites) {
    for (Index c = 0; c < n; ++c) labels.push_back({site, static_cast<int>(c)});
  }
  QuadraticHamiltonian h(RealVector::Constant(volume * n, spec.mass), k, std::move(labels), tol);
  auto op = frequency_operator(h, tol);
  return LatticeModel{std::move(sites), std::move(b), std::move(h), std::move(op.omega)};
}

FrozenReport frozen_report(const LatticeSpec& spec, Index budget, const Tolerances& tol) {
  const auto model = lattice_system(spec, budget, tol);
  const Index volume = spec.volume();
  const Index n = spec.n;
  const Index dim = volume * n;
  const RealMatrix perp = complement_of_span(spec.gammas, n, tol);

  FrozenReport r;
  r.volume = volume;
  r.span_dim = n - perp.cols();
  r.frozen_frequency = std::sqrt(spec.stiffness / spec.mass);
  r.dim_lower = perp.cols() * volume;
  r.mult_upper = static_cast<Index>(spec.gammas.size()) * volume;

  Matrix frame = Matrix::Zero(dim, perp.cols() * volume);
  for (Index s = 0; s < volume; ++s) {
    frame.block(s * n, s * perp.cols(), n, perp.cols()) = perp.cast<Complex>();
  }
  r.frozen_subspace = Subspace(frame, tol);
  r.frozen_dim_complex = r.frozen_subspace.dim();
  r.frozen_dim_real = 2 * r.frozen_dim_complex;

  const Matrix& omega = model.omega.matrix();
  const double scale = norm_scale(omega);
  r.frozen_eigen_residual = frame.cols() ? operator_norm(Matrix(omega * frame - r.frozen_frequency * frame)) : 0.0;
  r.frozen_exact = r.frozen_eigen_residual <= tol.residual * scale;

  const auto res = spectral_resolution(model.omega, tol);
  for (const auto& c : res.clusters) {
    if (std::abs(c.representative - r.frozen_frequency) <= tol.eig_cluster * scale) {
      r.full_multiplicity_at_frequency = static_cast<Index>(c.indices.size());
    }
  }

  const Subspace coupled = complement(r.frozen_subspace, tol);
  const auto mult = multiplicity(model.omega, coupled, tol);
  r.coupled_mult_per_cluster = mult.per_cluster;
  r.coupled_max_mult = mult.max_mult;
  r.dim_bound_satisfied = r.frozen_dim_complex >= r.dim_lower;
  r.mult_bound_satisfied = r.coupled_max_mult <= r.mult_upper;
  return r;
}

std::vector<ScanRow> multiplicity_scan(const LatticeSpec& spec, const std::vector<int>& half_widths, Index budget,
                                       const Tolerances& tol) {
  std::vector<ScanRow> rows;
  for (int half_width : half_widths) {
    LatticeSpec s = spec;
    s.L = half_width;
    const auto model = lattice_system(s, budget, tol);
    const auto res = spectral_resolution(model.omega, tol);
    Index max_mult = 0;
    for (const auto& c : res.clusters) max_mult = std::max(max_mult, static_cast<Index>(c.indices.size()));
    const Index volume = s.volume();
    rows.push_back({half_width, volume, max_mult, static_cast<double>(max_mult) / static_cast<double>(volume)});
  }
  return rows;
}

}  // namespace openext
