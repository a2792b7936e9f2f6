#pragma once

// Time propagation of conservative systems and of open systems with memory.

#include <functional>
#include <string>
#include <vector>

#include "openext/model.hpp"

namespace openext {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::string scheme;
  double dt = 0;          // largest step of the grid
  double norm_drift = 0;  // (max‖V‖ − min‖V‖) / max‖V‖ over the run
};

/// Samples of a forcing term on the propagation grid, interpreted as the
/// piecewise-linear interpolant. An empty list means zero forcing.
using ForcingSamples = std::vector<Vector>;

/// Built-in forcing profiles along a fixed direction.
struct ForcingSpec {
  enum class Kind { step, pulse, sine };
  Kind kind = Kind::pulse;
  Vector direction;
  double amplitude = 1;
  double t_on = 0;
  double t_off = 1;       // pulse only
  double frequency = 1;   // sine only: amplitude·sin(frequency·(t − t_on)) for t ≥ t_on

  ForcingSamples sample(const std::vector<double>& grid) const;
  static Kind parse_kind(const std::string& name);
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// ∂ₜV = −iΩV + F(t), propagated exactly in the eigenbasis of Ω for
/// piecewise-linear F.
Trajectory propagate_conservative(const ConservativeSystem& system, const Vector& v0, const ForcingSamples& forcing,
                                  const std::vector<double>& grid, const ProgressCallback& progress = {},
                                  const Tolerances& tol = {});

/// ∂ₜv = −iΩ₁v − ∫₀^{t} a(τ)v(t−τ)dτ + f(t) from rest on a uniform grid.
/// Local dynamics and forcing are integrated exactly; the memory term uses an
/// exponential midpoint step with trapezoidal history quadrature (order 2).
Trajectory propagate_open(const OpenSystem& open, const ForcingSamples& forcing, const std::vector<double>& grid,
                          const ProgressCallback& progress = {}, const Tolerances& tol = {});

struct EquivalenceReport {
  double residual = 0;        // max_t ‖P₁V(t) − v₁(t)‖
  double max_open_norm = 0;   // max_t ‖v₁(t)‖
  Trajectory full;
  Trajectory open;
};

/// Runs the full system from rest with forcing (f₁, 0) and the open system
/// with kernel measure_of(system), and compares them on H₁.
EquivalenceReport equivalence(const ConservativeSystem& system, const ForcingSamples& f1,
                              const std::vector<double>& grid, const Tolerances& tol = {});
double equivalence_residual(const ConservativeSystem& system, const ForcingSamples& f1,
                            const std::vector<double>& grid, const Tolerances& tol = {});

}  // namespace openext
