#pragma once

// Orbits, coupled/decoupled splits and spectral-multiplicity bounds.

#include <optional>
#include <string>
#include <vector>

#include "openext/model.hpp"

namespace openext {

/// Smallest op-invariant subspace containing `seed`: the span of the
/// eigen-cluster projections π_α(seed).
Subspace orbit(const HermitianOperator& op, const Subspace& seed, const Tolerances& tol = {});

/// H₁ = H₁c ⊕ H₁d and H₂ = H₂c ⊕ H₂d, all embedded in the full state space.
struct CoupledParts {
  Subspace h1c, h1d, h2c, h2d;
  double residual = 0;           // four_block_residual of this split
  double min_gap_omega1 = 0;     // smallest inter-cluster gap of Ω₁ (tolerance diagnostic)
  double min_gap_omega2 = 0;
};

CoupledParts coupled_parts(const ConservativeSystem& system, const Tolerances& tol = {});

/// Largest spectral norm among the ten blocks of Ω that vanish in the basis
/// (h1d, h1c, h2c, h2d) when the split is correct.
double four_block_residual(const ConservativeSystem& system, const CoupledParts& parts);

/// Restriction of Ω to an invariant subspace given by side-local frames.
ConservativeSystem restrict_system(const ConservativeSystem& system, const Matrix& frame1, const Matrix& frame2,
                                   const Tolerances& tol = {});

/// Restriction to H₁ ⊕ H₂c: the minimal conservative extension of H₁ inside the system.
ConservativeSystem minimal_subsystem(const ConservativeSystem& system, const Tolerances& tol = {});
/// Restriction to H₁c ⊕ H₂c.
ConservativeSystem reconstructible_core(const ConservativeSystem& system, const Tolerances& tol = {});

struct ClusterMultiplicity {
  double eigenvalue = 0;
  Index multiplicity = 0;
};

struct MultiplicityReport {
  Index max_mult = 0;
  std::vector<ClusterMultiplicity> per_cluster;
  double invariance_residual = 0;
  double min_gap = 0;
};

/// Spectral multiplicities of op restricted to an invariant subspace. Throws
/// PreconditionError when the subspace is not invariant.
MultiplicityReport multiplicity(const HermitianOperator& op, const Subspace& invariant_subspace,
                                const Tolerances& tol = {});

struct BoundCheck {
  std::string name;
  Index value = 0;
  Index bound = 0;
  bool applicable = true;
  bool satisfied() const { return !applicable || value <= bound; }
};

struct MultiplicityBoundReport {
  Index rank_gamma = 0;
  Index dim_h1c = 0;
  Index dim_h_min = 0;
  bool h_min_identity = false;  // O_Ω(H₁) = H₁ ⊕ H₂c
  MultiplicityReport omega_on_h_min;
  MultiplicityReport omega1_on_h1c;
  MultiplicityReport omega2_on_h2c;
  std::vector<BoundCheck> checks;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

MultiplicityBoundReport check_multiplicity_bounds(const ConservativeSystem& system, const Tolerances& tol = {});

struct SpectralWeight {
  double eigenvalue = 0;
  double weight = 0;  // ‖Γφ‖² for the string's unit eigenvector φ at this eigenvalue
};

struct StringDecomposition {
  std::vector<Subspace> strings;                     // in the full state space, inside H₂c
  std::vector<std::vector<SpectralWeight>> measures;  // per string, ascending eigenvalue
};

/// String j spans the j-th eigenvector of every cluster of Ω₂↾H₂c with
/// multiplicity ≥ j. Inside a degenerate cluster the eigenvectors are those of
/// Γ†Γ compressed to the cluster, ordered by decreasing coupling weight.
StringDecomposition string_decomposition(const ConservativeSystem& system, const Tolerances& tol = {});

struct ReconstructibilityReport {
  bool reconstructible = true;
  std::optional<double> witness_eigenvalue;
  Vector witness;                    // unit eigenmode of Ω killed by Γ̊
  bool decoupled_parts_trivial = true;  // dim h1d = dim h2d = 0
  bool consistent() const { return reconstructible == decoupled_parts_trivial; }
};

/// Eigenmode criterion: fails iff some eigenmode of Ω is annihilated by Γ̊.
ReconstructibilityReport is_reconstructible(const ConservativeSystem& system, const Tolerances& tol = {});

}  // namespace openext
