#pragma once

// Conservative systems, open systems and point spectral measures.
//
// All systems are stored in unit-mass form: a mass operator supplied at
// ingestion is folded into the generator by v -> m^{1/2} v.

#include <optional>
#include <string>
#include <vector>

#include "openext/numerics.hpp"

namespace openext {

/// Ω = [[Ω₁, Γ], [Γ†, Ω₂]] on H₁ ⊕ H₂ with dim H₁ = n1, dim H₂ = n2.
class ConservativeSystem {
 public:
  ConservativeSystem() = default;

  static ConservativeSystem assemble(const HermitianOperator& omega1, const HermitianOperator& omega2,
                                     const Matrix& gamma, const Tolerances& tol = {});

  /// Splits a full generator after its first `n1` coordinates.
  static ConservativeSystem from_matrix(const Matrix& omega, Index n1, const Tolerances& tol = {});

  /// Accepts a generator `a` with mass operator `mass` and rescales to unit
  /// mass: Ω = m^{-1/2}·A·m^{-1/2}. The mass must be block-diagonal over
  /// H₁ ⊕ H₂ so the observable/hidden split survives the rescaling.
  static ConservativeSystem from_mass_and_generator(const Matrix& mass, const Matrix& a, Index n1,
                                                    const Tolerances& tol = {});

  Index n1() const noexcept { return n1_; }
  Index n2() const noexcept { return omega_.dim() - n1_; }
  Index dim() const noexcept { return omega_.dim(); }

  const HermitianOperator& omega() const noexcept { return omega_; }
  HermitianOperator omega1() const;
  HermitianOperator omega2() const;
  Matrix gamma() const;

  /// Ω̊: the block-diagonal part diag(Ω₁, Ω₂).
  HermitianOperator diagonal_part() const;
  /// Γ̊: the off-diagonal part [[0, Γ], [Γ†, 0]].
  HermitianOperator off_diagonal_part() const;

  /// H₁ and H₂ as subspaces of the full state space.
  Subspace observable_space() const;
  Subspace hidden_space() const;

  /// Embeds frames of H₁ (resp. H₂) into the full space.
  Matrix embed_observable(const Matrix& frame) const;
  Matrix embed_hidden(const Matrix& frame) const;

 private:
  ConservativeSystem(HermitianOperator omega, Index n1) : omega_(std::move(omega)), n1_(n1) {}

  HermitianOperator omega_ = HermitianOperator::zero(0);
  Index n1_ = 0;
};

struct Atom {
  double frequency = 0;
  HermitianOperator mass;
};

/// N(dω) = Σ_k N_k δ(ω − ω_k). The friction kernel is a(t) = Σ_k e^{−iω_k t}·N_k.
class PointMeasure {
 public:
  PointMeasure() = default;

  /// Sorts atoms by frequency and merges atoms closer than
  /// τ_eig_cluster·(frequency span), summing their masses. Positivity of the
  /// masses is not enforced here; see `validate` and `check_dissipation`.
  PointMeasure(Index dim, std::vector<Atom> atoms, const Tolerances& tol = {});

  Index dim() const noexcept { return dim_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  /// Σ_k N_k = a(0).
  Matrix total_mass() const;

 private:
  Index dim_ = 0;
  std::vector<Atom> atoms_;
};

/// ∂ₜv = −iΩ₁v − ∫₀^∞ a(τ)v(t−τ)dτ + f(t), unit mass, delayed friction only.
class OpenSystem {
 public:
  OpenSystem() = default;

  /// `instantaneous` is the a_∞ term; any nonzero value is rejected.
  OpenSystem(HermitianOperator omega1, PointMeasure kernel, const std::optional<Matrix>& instantaneous = {});

  /// Mass-normalizing constructor: Ω₁ = m^{-1/2}·A·m^{-1/2}, N_k -> m^{-1/2}·N_k·m^{-1/2}.
  static OpenSystem from_mass(const Matrix& mass, const Matrix& a, const PointMeasure& kernel,
                              const Tolerances& tol = {});

  Index dim() const noexcept { return omega1_.dim(); }
  const HermitianOperator& omega1() const noexcept { return omega1_; }
  const PointMeasure& kernel() const noexcept { return kernel_; }

 private:
  HermitianOperator omega1_ = HermitianOperator::zero(0);
  PointMeasure kernel_;
};

/// An orthogonal family of subspaces of H₁ (side 1) or H₂ (side 2).
class BlockPartition {
 public:
  BlockPartition(int side, Index side_dim, std::vector<Subspace> parts, const Tolerances& tol = {});

  int side() const noexcept { return side_; }
  Index side_dim() const noexcept { return side_dim_; }
  const std::vector<Subspace>& parts() const noexcept { return parts_; }
  /// Parts exhaust the side; false flags a partial partition.
  bool complete() const noexcept { return complete_; }

 private:
  int side_;
  Index side_dim_;
  std::vector<Subspace> parts_;
  bool complete_ = false;
};

struct Violation {
  std::string code;
  std::string message;
  double magnitude = 0;
  std::optional<std::size_t> index;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks a raw generator against the block-form invariants without throwing.
ValidationReport validate_system(const Matrix& omega, Index n1, const Tolerances& tol = {});
ValidationReport validate(const ConservativeSystem& system, const Tolerances& tol = {});
/// Per-atom positivity (the point-mass form of the dissipation condition).
ValidationReport validate(const PointMeasure& measure, const Tolerances& tol = {});
ValidationReport validate(const OpenSystem& open, const Tolerances& tol = {});

/// m^{-1/2} for a positive definite Hermitian mass operator.
Matrix inverse_sqrt_mass(const Matrix& mass, const Tolerances& tol = {});

}  // namespace openext
