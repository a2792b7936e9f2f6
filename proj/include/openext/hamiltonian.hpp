#pragma once

// Frequency operators of quadratic Hamiltonians and the oscillator / lattice
// models with frozen degrees of freedom.

#include <string>
#include <vector>

#include "openext/decomposition.hpp"
#include "openext/model.hpp"

namespace openext {

struct DofLabel {
  std::vector<int> site;  // lattice site (empty for non-lattice models)
  int component = 0;
};

/// H(p, q) = ½·pᵀM⁻¹p + ½·qᵀKq with M diagonal positive and K symmetric PSD.
class QuadraticHamiltonian {
 public:
  QuadraticHamiltonian(RealVector mass, RealMatrix stiffness, std::vector<DofLabel> labels = {},
                       const Tolerances& tol = {});

  Index dofs() const noexcept { return mass_.size(); }
  const RealVector& mass() const noexcept { return mass_; }
  const RealMatrix& stiffness() const noexcept { return stiffness_; }
  const std::vector<DofLabel>& labels() const noexcept { return labels_; }

 private:
  RealVector mass_;
  RealMatrix stiffness_;
  std::vector<DofLabel> labels_;
};

struct FrequencyOperator {
  HermitianOperator omega;
  /// K is singular: zero modes map to frequency 0 and z = Q̃′ − iΩQ̃ does not
  /// determine Q̃ along them.
  bool zero_modes = false;
};

/// Ω = (M^{−1/2}·K·M^{−1/2})^{1/2}; z = Q̃′ − iΩQ̃ with Q̃ = M^{1/2}Q obeys ż = −iΩz.
FrequencyOperator frequency_operator(const QuadraticHamiltonian& h, const Tolerances& tol = {});

/// h₁ = |p|²/2m + ξ|q|²/2 on N observable coordinates, coupled to a hidden
/// quadratic system through Σ_j [(q, γ_{1j}) − (φ, γ_{2j})]².
struct OscillatorSpec {
  Index n = 0;
  double mass = 1;
  double stiffness = 1;
  std::vector<RealVector> gamma1;  // J vectors in R^N
  std::vector<RealVector> gamma2;  // J vectors in R^G
};

/// Assembles the full stiffness over (q, φ), interaction terms entering K with
/// factor 2, and returns the unit-mass conservative system with H₁ = q-coordinates.
ConservativeSystem oscillator_system(const OscillatorSpec& spec, const QuadraticHamiltonian& hidden,
                                     const Tolerances& tol = {});

/// dim span{γ_{1j}}.
Index coupling_span_dim(const std::vector<RealVector>& gammas, Index n, const Tolerances& tol = {});

struct LatticeSpec {
  int d = 1;
  int L = 0;
  Index n = 1;  // DOFs per site
  double mass = 1;
  double stiffness = 1;
  std::vector<RealVector> gammas;  // J vectors in R^N

  Index volume() const;  // (2L+1)^d
  Index total_dim() const { return volume() * n; }
  void validate(Index budget) const;
};

constexpr Index kDefaultLatticeBudget = 1500;

struct LatticeModel {
  std::vector<std::vector<int>> sites;  // lexicographic over [−L, L]^d
  RealMatrix site_form;                 // B: Σ_n Σ_i (x_n − x_{n+e_i})² = xᵀBx, x = 0 off the cube
  QuadraticHamiltonian hamiltonian;
  HermitianOperator omega;
};

/// K = ξ·I + 2·Σ_j B ⊗ γ_jγ_jᵀ with Dirichlet closure q_n = 0 outside Λ_L.
LatticeModel lattice_system(const LatticeSpec& spec, Index budget = kDefaultLatticeBudget,
                            const Tolerances& tol = {});

struct FrozenReport {
  Subspace frozen_subspace;  // span{e_n ⊗ g : n ∈ Λ, g ⊥ E_γ}
  Index frozen_dim_complex = 0;
  Index frozen_dim_real = 0;   // phase-space count: two per frozen complex dimension
  double frozen_frequency = 0;  // √(ξ/m)
  double frozen_eigen_residual = 0;
  Index full_multiplicity_at_frequency = 0;  // from the eigenvalues of the whole Ω_Λ
  std::vector<ClusterMultiplicity> coupled_mult_per_cluster;
  Index coupled_max_mult = 0;
  Index dim_lower = 0;   // (N − dim E_γ)·|Λ|
  Index mult_upper = 0;  // J·|Λ|
  Index volume = 0;
  Index span_dim = 0;
  bool frozen_exact = false;
  bool dim_bound_satisfied = false;
  bool mult_bound_satisfied = false;
};

FrozenReport frozen_report(const LatticeSpec& spec, Index budget = kDefaultLatticeBudget,
                           const Tolerances& tol = {});

struct ScanRow {
  int L = 0;
  Index volume = 0;
  Index max_mult = 0;
  double ratio = 0;  // max_mult / volume
};

/// mult Ω_Λ / |Λ| tabulated over cube half-widths; no limit is asserted.
std::vector<ScanRow> multiplicity_scan(const LatticeSpec& spec, const std::vector<int>& half_widths,
                                       Index budget = kDefaultLatticeBudget, const Tolerances& tol = {});

}  // namespace openext
