#pragma once

// Coupling channels and s-invariant (simultaneously block-diagonalizing)
// decompositions of a conservative system.

#include <optional>
#include <utility>
#include <vector>

#include "openext/model.hpp"

namespace openext {

/// Singular triples of Γ: Γ = Σ_q √γ_q·|g_q⟩⟨g′_q|.
struct ChannelSet {
  Index rank = 0;
  RealVector gammas;  // γ_q = σ_q², descending
  Matrix g;           // n1 × rank, columns g_q
  Matrix g_prime;     // n2 × rank, columns g′_q = U·g_q
  /// Groups of channel indices whose γ_q coincide within τ_eig_cluster; the
  /// channel basis inside such a group is solver-dependent.
  std::vector<std::vector<Index>> degenerate_groups;
};

ChannelSet channels(const ConservativeSystem& system, const Tolerances& tol = {});

struct CouplingMatrix {
  Eigen::MatrixXi ranks;                // [M_Γ]_{αβ} = rank(F_{1α}†·Γ·F_{2β})
  std::vector<Index> zero_rows;         // H₁ parts coupled to nothing
  std::vector<Index> zero_cols;         // H₂ parts coupled to nothing
};

CouplingMatrix coupling_matrix(const ConservativeSystem& system, const BlockPartition& partition1,
                               const BlockPartition& partition2, const Tolerances& tol = {});

struct SInvarianceReport {
  bool verdict = false;
  double omega_commutator = 0;       // ‖[π′, Ω]‖
  double projection_commutator = 0;  // ‖[π′, P₁]‖
};

/// `h_sub` lives in the full space H₁ ⊕ H₂.
SInvarianceReport is_s_invariant(const ConservativeSystem& system, const Subspace& h_sub,
                                 const Tolerances& tol = {});

struct SInvariantComponent {
  Subspace h1;  // inside H₁ (ambient n1)
  Subspace h2;  // inside H₂ (ambient n2)
  std::vector<Index> channels;
  bool decoupled = false;  // the explicit H₁d or H₂d remainder
  SInvarianceReport invariance;
};

struct SInvariantDecomposition {
  ChannelSet channel_set;
  std::vector<SInvariantComponent> components;
  std::vector<Index> assignment;  // channel index -> component index
  std::vector<std::pair<Index, Index>> edges;
  /// Largest spectral norm of an inter-component block of Ω in the
  /// concatenated component basis.
  double block_residual = 0;

  std::size_t coupled_count() const;
};

/// Finest s-invariant splitting in which every channel vector lies in one part:
/// connected components of the channel graph, each spanned by channel orbits.
SInvariantDecomposition canonical_decomposition(const ConservativeSystem& system, const Tolerances& tol = {});

struct DecouplingReport {
  std::vector<double> times;
  double omega_block = 0;           // ‖π′₁Ω₁π″₁‖
  double kernel_block = 0;          // max_t ‖π′₁a₁(t)π″₁‖
  double reverse_omega_block = 0;   // ‖π″₁Ω₁π′₁‖
  double reverse_kernel_block = 0;  // max_t ‖π″₁a₁(t)π′₁‖
  bool decoupled = false;
  bool reciprocal = false;
  std::optional<SInvariantComponent> splitting;  // H′ = h1_sub ⊕ O_{Ω₂}(Γ†·h1_sub)
};

/// 25 points on [0, 2π/gap], gap the smallest nonzero eigenvalue gap of Ω₂
/// (gap = 1 when Ω₂ has a single cluster).
std::vector<double> decoupling_time_grid(const ConservativeSystem& system, const Tolerances& tol = {});

/// `h1_sub` lives in H₁ (ambient n1).
DecouplingReport decoupling_report(const ConservativeSystem& system, const Subspace& h1_sub,
                                   const Tolerances& tol = {});

}  // namespace openext
