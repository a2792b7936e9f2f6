#pragma once

// Friction kernels and minimal conservative extensions of point measures.

#include <cstdint>
#include <optional>
#include <vector>

#include "openext/model.hpp"

namespace openext {

/// a(t) sampled at nonnegative ascending times.
struct KernelSamples {
  std::vector<double> times;
  std::vector<Matrix> values;

  /// Throws unless times are ascending, start at t ≥ 0, and match values.
  void validate() const;
  Index dim() const { return values.empty() ? 0 : values.front().rows(); }
};

/// a₁(t) = Γ·e^{−iΩ₂t}·Γ†.
KernelSamples kernel_eval(const ConservativeSystem& system, const std::vector<double>& times,
                          const Tolerances& tol = {});
/// a₂(t) = Γ†·e^{−iΩ₁t}·Γ.
KernelSamples kernel_eval_hidden(const ConservativeSystem& system, const std::vector<double>& times,
                                 const Tolerances& tol = {});
/// a(t) = Σ_k e^{−iω_k t}·N_k.
KernelSamples kernel_eval(const PointMeasure& measure, const std::vector<double>& times);
Matrix kernel_at(const PointMeasure& measure, double t);

/// Uniform grid t_j = t0 + j·(t1 − t0)/(steps − 1), j < steps.
std::vector<double> linspace(double t0, double t1, std::size_t steps);

/// Discrete minimal extension: H₂ = ⊕_k C^{r_k}, Ω₂ = blockdiag(ω_k·I), Γ = [C₁ … C_K]
/// with N_k = C_k·C_k†. Throws DissipationError on a non-PSD atom.
ConservativeSystem minimal_extension(const PointMeasure& measure, const Tolerances& tol = {});

/// Spectral measure of the hidden half: one atom Γ·E_k·Γ† per eigen-cluster of Ω₂.
PointMeasure measure_of(const ConservativeSystem& system, const Tolerances& tol = {});

struct DissipationOptions {
  std::size_t trials = 32;
  std::size_t grid_points = 200;
  double horizon = 5.0;
  std::uint64_t seed = 0x5EED;
};

struct MonteCarloTrial {
  double value = 0;       // min over directions of the discretized quadratic form
  double normalized = 0;  // value / scale
  double carrier = 0;     // carrier frequency of the test profile
};

struct DissipationReport {
  bool algebraic_checked = false;
  bool algebraic_pass = true;
  std::optional<std::size_t> witness_atom;
  double witness_min_eigenvalue = 0;
  std::vector<MonteCarloTrial> trials;
  bool monte_carlo_pass = true;
  std::optional<std::size_t> first_negative_trial;
  double min_normalized = 0;
  DissipationOptions options;

  /// The algebraic check is authoritative; sample-only checks fall back to Monte-Carlo.
  bool pass() const { return algebraic_checked ? algebraic_pass : monte_carlo_pass; }
};

/// Algebraic per-atom positivity plus the Monte-Carlo time-domain check of
/// Re ∫∫ v̄(t)·a(τ)·v(t−τ) dt dτ ≥ 0.
DissipationReport check_dissipation(const PointMeasure& measure, const DissipationOptions& options = {},
                                    const Tolerances& tol = {});
/// Monte-Carlo check only, on samples given on a uniform grid starting at t = 0;
/// the test profiles live on that grid.
DissipationReport check_dissipation(const KernelSamples& samples, const DissipationOptions& options = {},
                                    const Tolerances& tol = {});

struct FitOptions {
  std::size_t max_atoms = 8;
  /// Singular values of the Hankel matrix below this fraction of the largest are noise.
  double singular_cut = 1e-8;
  /// Optional bound on |ω|; must lie below the Nyquist limit π/Δt.
  std::optional<double> max_frequency;
};

struct FitResult {
  PointMeasure measure;
  double condition = 0;       // of the Vandermonde system for the masses
  double max_residual = 0;    // max_j ‖a_fit(t_j) − a(t_j)‖_max
};

/// Matrix-pencil recovery of frequencies from trace a(t_j), then least-squares
/// masses projected onto the PSD cone.
FitResult fit_point_measure(const KernelSamples& samples, const FitOptions& options = {},
                            const Tolerances& tol = {});

}  // namespace openext
