#include "openext/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include "openext/extension.hpp"

namespace openext {

namespace {

constexpr Complex kI{0.0, 1.0};

/// φ₁(z) = (e^z − 1)/z and φ₂(z) = (e^z − 1 − z)/z², by series near zero.
std::pair<Complex, Complex> phi12(Complex z) {
  if (std::abs(z) < 0.5) {
    Complex p1 = 0, p2 = 0, term = 1;  // term = z^k / (k+2)!·(k+2)(k+1) bookkeeping below
    double fact = 1;                    // (k+1)!
    for (int k = 0; k < 20; ++k) {
      // φ₁ = Σ z^k/(k+1)!, φ₂ = Σ z^k/(k+2)!
      p1 += term / fact;
      p2 += term / (fact * (k + 2));
      term *= z;
      fact *= (k + 2);
    }
    return {p1, p2};
  }
  const Complex e = std::exp(z);
  return {(e - 1.0) / z, (e - 1.0 - z) / (z * z)};
}

/// Coefficients for one step of length h on eigenvalues λ:
/// x ← e·x + h·(p1·F₀ + p2·(F₁ − F₀)).
struct StepCoefficients {
  Vector e, p1, p2;
  StepCoefficients(const RealVector& lambda, double h) : e(lambda.size()), p1(lambda.size()), p2(lambda.size()) {
    for (Index k = 0; k < lambda.size(); ++k) {
      const Complex z = -kI * lambda(k) * h;
      e(k) = std::exp(z);
      std::tie(p1(k), p2(k)) = phi12(z);
    }
  }
};

void require_ascending(const std::vector<double>& grid) {
  if (grid.empty()) throw PreconditionError("time grid is empty");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) throw PreconditionError("time grid must be strictly ascending");
  }
}

double uniform_grid_step(const std::vector<double>& grid) {
  require_ascending(grid);
  if (grid.size() < 2) return 0;
  const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (std::abs(grid[j] - (grid.front() + h * static_cast<double>(j))) > 1e-9 * std::max(1.0, std::abs(grid.back()))) {
      throw PreconditionError("open-system propagation needs a uniform grid");
    }
  }
  return h;
}

void require_forcing(const ForcingSamples& forcing, std::size_t steps, Index dim) {
  if (forcing.empty()) return;
  if (forcing.size() != steps) throw ValidationError("forcing must have one sample per grid point");
  for (const auto& f : forcing) {
    if (f.size() != dim) throw ValidationError("forcing sample has wrong dimension");
  }
}

void finish(Trajectory& traj) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& s : traj.states) {
    lo = std::min(lo, s.norm());
    hi = std::max(hi, s.norm());
  }
  traj.norm_drift = hi > 0 ? (hi - lo) / hi : 0.0;
  for (std::size_t j = 1; j < traj.times.size(); ++j) traj.dt = std::max(traj.dt, traj.times[j] - traj.times[j - 1]);
}

}  // namespace

ForcingSpec::Kind ForcingSpec::parse_kind(const std::string& name) {
  if (name == "step") return Kind::step;
  if (name == "pulse") return Kind::pulse;
  if (name == "sine") return Kind::sine;
  throw ValidationError("unknown forcing kind '" + name + "' (expected step, pulse or sine)");
}

ForcingSamples ForcingSpec::sample(const std::vector<double>& grid) const {
  ForcingSamples out;
  out.reserve(grid.size());
  for (double t : grid) {
    double s = 0;
    switch (kind) {
      case Kind::step: s = t >= t_on ? amplitude : 0.0; break;
      case Kind::pulse: s = (t >= t_on && t <= t_off) ? amplitude : 0.0; break;
      case Kind::sine: s = t >= t_on ? amplitude * std::sin(frequency * (t - t_on)) : 0.0; break;
    }
    out.push_back(s * direction);
  }
  return out;
}

Trajectory propagate_conservative(const ConservativeSystem& system, const Vector& v0, const ForcingSamples& forcing,
                                  const std::vector<double>& grid, const ProgressCallback& progress,
                                  const Tolerances& tol) {
  require_ascending(grid);
  if (v0.size() != system.dim()) throw ValidationError("initial state has wrong dimension");
  require_forcing(forcing, grid.size(), system.dim());
  const auto es = eigh(system.omega(), tol);
  const Matrix& basis = es.vectors;

  Trajectory traj;
  traj.scheme = "eigenbasis-exact-piecewise-linear";
  traj.times = grid;
  traj.states.reserve(grid.size());
  Vector c = basis.adjoint() * v0;
  traj.states.push_back(v0);
  Vector f_prev = forcing.empty() ? Vector::Zero(system.dim()) : Vector(basis.adjoint() * forcing[0]);
  double cached_h = -1;
  std::optional<StepCoefficients> coeff;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double h = grid[j] - grid[j - 1];
    if (h != cached_h) {
      coeff.emplace(es.values, h);
      cached_h = h;
    }
    c = coeff->e.cwiseProduct(c);
    if (!forcing.empty()) {
      const Vector f_next = basis.adjoint() * forcing[j];
      c += h * (coeff->p1.cwiseProduct(f_prev) + coeff->p2.cwiseProduct(f_next - f_prev));
      f_prev = f_next;
    }
    traj.states.push_back(basis * c);
    if (progress) progress(j, grid.size() - 1);
  }
  finish(traj);
  return traj;
}

Trajectory propagate_open(const OpenSystem& open, const ForcingSamples& forcing, const std::vector<double>& grid,
                          const ProgressCallback& progress, const Tolerances& tol) {
  const double h = uniform_grid_step(grid);
  const Index n = open.dim();
  require_forcing(forcing, grid.size(), n);
  if (open.kernel().dim() != n) throw ValidationError("open system has no kernel of matching dimension");

  const auto es = eigh(open.omega1(), tol);
  const Matrix& u = es.vectors;
  const auto& atoms = open.kernel().atoms();
  const std::size_t k_atoms = atoms.size();
  std::vector<Matrix> masses;  // in the Ω₁ eigenbasis
  std::vector<Complex> decay_full, decay_half;
  for (const auto& atom : atoms) {
    masses.push_back(u.adjoint() * atom.mass.matrix() * u);
    decay_full.push_back(std::exp(-kI * atom.frequency * h));
    decay_half.push_back(std::exp(-kI * atom.frequency * (0.5 * h)));
  }

  Trajectory traj;
  traj.scheme = "exponential-midpoint-trapezoid-memory";
  traj.times = grid;
  traj.states.reserve(grid.size());
  Vector x = Vector::Zero(n);  // rest condition
  traj.states.push_back(x);
  if (grid.size() < 2) {
    finish(traj);
    return traj;
  }

  const StepCoefficients full(es.values, h);
  const StepCoefficients half(es.values, 0.5 * h);
  // running[k] = Σ_{j≤n} e^{−iω_k(t_n − t_j)}·x_j, so the trapezoid rule on
  // [t₀, t_n] is h·(running[k] − x_n/2) given x₀ = 0.
  std::vector<Vector> running(k_atoms, Vector::Zero(n));
  const auto forcing_at = [&](std::size_t j) -> Vector {
    return forcing.empty() ? Vector(Vector::Zero(n)) : Vector(u.adjoint() * forcing[j]);
  };
  Vector f_now = forcing_at(0);
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const Vector f_next = forcing_at(j + 1);
    const Vector f_mid = 0.5 * (f_now + f_next);

    Vector memory_now = Vector::Zero(n);
    std::vector<Vector> trapezoid(k_atoms);
    for (std::size_t k = 0; k < k_atoms; ++k) {
      trapezoid[k] = h * (running[k] - 0.5 * x);
      memory_now += masses[k] * trapezoid[k];
    }
    Vector x_mid = half.e.cwiseProduct(x) + (0.5 * h) * (half.p1.cwiseProduct(f_now) + half.p2.cwiseProduct(f_mid - f_now));
    x_mid -= (0.5 * h) * half.p1.cwiseProduct(memory_now);

    Vector memory_mid = Vector::Zero(n);
    for (std::size_t k = 0; k < k_atoms; ++k) {
      const Vector integral = decay_half[k] * trapezoid[k] + (0.25 * h) * (decay_half[k] * x + x_mid);
      memory_mid += masses[k] * integral;
    }
    x = full.e.cwiseProduct(x) + h * (full.p1.cwiseProduct(f_now) + full.p2.cwiseProduct(f_next - f_now)) -
        h * full.p1.cwiseProduct(memory_mid);
    for (std::size_t k = 0; k < k_atoms; ++k) running[k] = decay_full[k] * running[k] + x;
    traj.states.push_back(u * x);
    f_now = f_next;
    if (progress) progress(j + 1, grid.size() - 1);
  }
  finish(traj);
  return traj;
}

EquivalenceReport equivalence(const ConservativeSystem& system, const ForcingSamples& f1,
                              const std::vector<double>& grid, const Tolerances& tol) {
  require_forcing(f1, grid.size(), system.n1());
  ForcingSamples full_forcing;
  for (const auto& f : f1) {
    Vector g = Vector::Zero(system.dim());
    g.head(system.n1()) = f;
    full_forcing.push_back(std::move(g));
  }
  EquivalenceReport r;
  r.full = propagate_conservative(system, Vector::Zero(system.dim()), full_forcing, grid, {}, tol);
  const OpenSystem open(system.omega1(), measure_of(system, tol));
  r.open = propagate_open(open, f1, grid, {}, tol);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Vector diff = r.full.states[j].head(system.n1()) - r.open.states[j];
    r.residual = std::max(r.residual, diff.norm());
    r.max_open_norm = std::max(r.max_open_norm, r.open.states[j].norm());
  }
  return r;
}

double equivalence_residual(const ConservativeSystem& system, const ForcingSamples& f1,
                            const std::vector<double>& grid, const Tolerances& tol) {
  return equivalence(system, f1, grid, tol).residual;
}

}  // namespace openext
