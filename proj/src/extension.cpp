#include "openext/extension.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace openext {

namespace {

constexpr Complex kI{0.0, 1.0};

/// B·diag(e^{−iλt})·B† at each time.
KernelSamples propagate_kernel(const Matrix& b, const RealVector& lambda, const std::vector<double>& times) {
  KernelSamples out;
  out.times = times;
  out.values.reserve(times.size());
  for (double t : times) {
    Vector phases(lambda.size());
    for (Index k = 0; k < lambda.size(); ++k) phases(k) = std::exp(-kI * lambda(k) * t);
    out.values.push_back(b * phases.asDiagonal() * b.adjoint());
  }
  return out;
}

void require_nonnegative_times(const std::vector<double>& times) {
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] >= 0.0)) throw PreconditionError("kernel times must be nonnegative (rest condition)");
    if (j > 0 && times[j] < times[j - 1]) throw PreconditionError("kernel times must be ascending");
  }
}

/// Spacing of a uniform grid; throws if the grid is not uniform.
double uniform_step(const std::vector<double>& times) {
  if (times.size() < 2) throw PreconditionError("need at least two samples on a uniform grid");
  const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(h > 0)) throw PreconditionError("time grid must be strictly increasing");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (std::abs(times[j] - (times.front() + static_cast<double>(j) * h)) > 1e-9 * std::max(1.0, std::abs(times.back()))) {
      throw PreconditionError("time grid is not uniform");
    }
  }
  return h;
}

/// Minimum over directions c of the discretized form for v(t) = φ(t)·c, given
/// lag samples a(m·h), m = 0 … G−1. The equal-time term carries weight ½.
double min_quadratic_form(const std::vector<Matrix>& lags, const Vector& profile, double h) {
  const Index g = profile.size();
  const Index n = lags.front().rows();
  Matrix m = Matrix::Zero(n, n);
  for (Index lag = 0; lag < g; ++lag) {
    Complex corr = 0;
    for (Index i = lag; i < g; ++i) corr += std::conj(profile(i)) * profile(i - lag);
    if (lag == 0) corr *= 0.5;
    m += corr * lags[static_cast<std::size_t>(lag)];
  }
  m *= h * h;
  const Matrix herm = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Projects the profile, within its support, onto the complement of the
/// carriers e^{−iω_k t} of every atom but `keep`: for one atom the discretized
/// form is ½h²·|Σ_i φ(t_i)e^{iωt_i}|²·c†Nc, so the other atoms drop out.
void null_other_atoms(Vector& profile, const std::vector<double>& frequencies, std::size_t keep, double h) {
  std::vector<Index> support;
  for (Index i = 0; i < profile.size(); ++i) {
    if (profile(i) != Complex(0)) support.push_back(i);
  }
  const auto rows = static_cast<Index>(support.size());
  Matrix u(rows, static_cast<Index>(frequencies.size() - 1));
  Index col = 0;
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (k == keep) continue;
    for (Index r = 0; r < rows; ++r) {
      u(r, col) = std::exp(-kI * frequencies[k] * h * static_cast<double>(support[static_cast<std::size_t>(r)]));
    }
    ++col;
  }
  Vector local(rows);
  for (Index r = 0; r < rows; ++r) local(r) = profile(support[static_cast<std::size_t>(r)]);
  const Eigen::ColPivHouseholderQR<Matrix> qr(u);
  local -= u * qr.solve(local);
  for (Index r = 0; r < rows; ++r) profile(support[static_cast<std::size_t>(r)]) = local(r);
}

void run_monte_carlo(DissipationReport& report, const std::vector<Matrix>& lags, double h,
                     const std::vector<double>& atom_frequencies, double lo, double hi, const Tolerances& tol) {
  const auto& opt = report.options;
  const Index g = static_cast<Index>(lags.size());
  const double horizon = h * static_cast<double>(g - 1);
  double lag_scale = 0;
  for (const auto& a : lags) lag_scale = std::max(lag_scale, operator_norm(a));
  if (!(lag_scale > 0)) lag_scale = 1;

  const auto pass_of = [&](std::size_t trial) { return (trial / 2) / std::max<std::size_t>(atom_frequencies.size(), 1); };
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  report.min_normalized = std::numeric_limits<double>::infinity();
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    // Even trials aim the carrier at an atom over the full support (narrowest
    // spectral window), exactly on the first pass; odd trials sweep the band.
    const bool aimed = trial % 2 == 0 && !atom_frequencies.empty();
    double carrier, start = 0, stop = horizon;
    if (aimed) {
      carrier = atom_frequencies[(trial / 2) % atom_frequencies.size()];
      if (pass_of(trial) > 0) carrier += 0.1 * (unit(rng) - 0.5);
    } else {
      carrier = lo + (hi - lo) * unit(rng);
      start = 0.2 * horizon * unit(rng);
      stop = horizon * (0.8 + 0.2 * unit(rng));
    }
    Vector profile = Vector::Zero(g);
    for (Index i = 0; i < g; ++i) {
      const double t = h * static_cast<double>(i);
      if (t <= start || t >= stop) continue;
      const double s = std::sin(std::numbers::pi * (t - start) / (stop - start));
      profile(i) = s * s * std::exp(-kI * carrier * t);
    }
    if (aimed && pass_of(trial) == 0 && atom_frequencies.size() > 1) {
      null_other_atoms(profile, atom_frequencies, (trial / 2) % atom_frequencies.size(), h);
    }
    const double mass = profile.cwiseAbs().sum();
    const double value = min_quadratic_form(lags, profile, h);
    const double scale = std::max(h * h * mass * mass * lag_scale, std::numeric_limits<double>::min());
    MonteCarloTrial row{value, value / scale, carrier};
    report.min_normalized = std::min(report.min_normalized, row.normalized);
    if (row.normalized < -tol.residual && !report.first_negative_trial) report.first_negative_trial = trial;
    report.trials.push_back(row);
  }
  if (report.trials.empty()) report.min_normalized = 0;
  report.monte_carlo_pass = !report.first_negative_trial.has_value();
}

}  // namespace

void KernelSamples::validate() const {
  if (times.size() != values.size()) throw ValidationError("kernel samples: times and values differ in length");
  require_nonnegative_times(times);
  for (const auto& v : values) {
    if (v.rows() != v.cols() || v.rows() != dim()) throw ValidationError("kernel samples: inconsistent matrix shapes");
  }
}

std::vector<double> linspace(double t0, double t1, std::size_t steps) {
  std::vector<double> out(steps);
  if (steps == 1) {
    out[0] = t0;
    return out;
  }
  for (std::size_t j = 0; j < steps; ++j) {
    out[j] = t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(steps - 1);
  }
  return out;
}

KernelSamples kernel_eval(const ConservativeSystem& system, const std::vector<double>& times, const Tolerances& tol) {
  require_nonnegative_times(times);
  const auto es = eigh(system.omega2(), tol);
  return propagate_kernel(Matrix(system.gamma() * es.vectors), es.values, times);
}

KernelSamples kernel_eval_hidden(const ConservativeSystem& system, const std::vector<double>& times,
                                 const Tolerances& tol) {
  require_nonnegative_times(times);
  const auto es = eigh(system.omega1(), tol);
  return propagate_kernel(Matrix(system.gamma().adjoint() * es.vectors), es.values, times);
}

Matrix kernel_at(const PointMeasure& measure, double t) {
  Matrix a = Matrix::Zero(measure.dim(), measure.dim());
  for (const auto& atom : measure.atoms()) a += std::exp(-kI * atom.frequency * t) * atom.mass.matrix();
  return a;
}

KernelSamples kernel_eval(const PointMeasure& measure, const std::vector<double>& times) {
  require_nonnegative_times(times);
  KernelSamples out;
  out.times = times;
  for (double t : times) out.values.push_back(kernel_at(measure, t));
  return out;
}

ConservativeSystem minimal_extension(const PointMeasure& measure, const Tolerances& tol) {
  const Index n1 = measure.dim();
  std::vector<Eigensystem<Complex>> factors;
  double largest = 0;
  for (const auto& atom : measure.atoms()) {
    factors.push_back(eigh(atom.mass, tol));
    if (factors.back().values.size()) largest = std::max(largest, factors.back().values.cwiseAbs().maxCoeff());
  }
  const double floor = -tol.residual * (largest > 0 ? largest : 1.0);
  const double cut = tol.rank * largest;

  std::vector<Matrix> columns;
  std::vector<double> frequencies;
  Index n2 = 0;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& f = factors[k];
    const double min_eig = f.values.size() ? f.values.minCoeff() : 0.0;
    if (min_eig < floor) {
      std::ostringstream os;
      os << "dissipation condition violated: atom " << k << " has min eigenvalue " << min_eig;
      throw DissipationError(os.str(), k, min_eig);
    }
    // Descending eigenvalues above the rank cut give N_k = C_k·C_k†.
    Matrix c(n1, 0);
    for (Index i = f.values.size() - 1; i >= 0; --i) {
      if (f.values(i) <= cut) break;
      c.conservativeResize(Eigen::NoChange, c.cols() + 1);
      c.col(c.cols() - 1) = f.vectors.col(i) * std::sqrt(f.values(i));
    }
    n2 += c.cols();
    columns.push_back(std::move(c));
    frequencies.push_back(measure.atoms()[k].frequency);
  }

  Matrix gamma(n1, n2);
  RealVector hidden(n2);
  Index offset = 0;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Index r = columns[k].cols();
    gamma.middleCols(offset, r) = columns[k];
    hidden.segment(offset, r).setConstant(frequencies[k]);
    offset += r;
  }
  return ConservativeSystem::assemble(HermitianOperator::zero(n1), HermitianOperator::diagonal(hidden), gamma, tol);
}

PointMeasure measure_of(const ConservativeSystem& system, const Tolerances& tol) {
  const Index n1 = system.n1();
  const Matrix gamma = system.gamma();
  const double coupling = operator_norm(Matrix(gamma * gamma.adjoint()));
  std::vector<Atom> atoms;
  if (coupling > 0) {
    const auto res = spectral_resolution(system.omega2(), tol);
    for (std::size_t c = 0; c < res.clusters.size(); ++c) {
      const Matrix b = gamma * res.cluster_frame(c);
      Matrix mass = b * b.adjoint();
      if (operator_norm(mass) <= tol.rank * coupling) continue;
      atoms.push_back({res.clusters[c].representative, HermitianOperator(mass, tol)});
    }
  }
  return PointMeasure(n1, std::move(atoms), tol);
}

DissipationReport check_dissipation(const PointMeasure& measure, const DissipationOptions& options,
                                    const Tolerances& tol) {
  DissipationReport report;
  report.options = options;
  report.algebraic_checked = true;
  const auto v = validate(measure, tol);
  for (const auto& violation : v.violations) {
    if (violation.code == "psd" && !report.witness_atom) {
      report.witness_atom = violation.index;
      report.witness_min_eigenvalue = violation.magnitude;
    }
  }
  report.algebraic_pass = !report.witness_atom.has_value();

  if (options.grid_points >= 2 && measure.dim() > 0) {
    const auto grid = linspace(0.0, options.horizon, options.grid_points);
    const double h = grid[1] - grid[0];
    std::vector<double> freqs;
    for (const auto& atom : measure.atoms()) freqs.push_back(atom.frequency);
    const double lo = freqs.empty() ? -1.0 : freqs.front() - 1.0;
    const double hi = freqs.empty() ? 1.0 : freqs.back() + 1.0;
    run_monte_carlo(report, kernel_eval(measure, grid).values, h, freqs, lo, hi, tol);
  }
  return report;
}

DissipationReport check_dissipation(const KernelSamples& samples, const DissipationOptions& options,
                                    const Tolerances& tol) {
  samples.validate();
  DissipationReport report;
  report.options = options;
  report.options.grid_points = samples.times.size();
  if (samples.times.empty() || samples.dim() == 0) return report;
  if (std::abs(samples.times.front()) > 0) throw PreconditionError("sample grid must start at t = 0");
  const double h = uniform_step(samples.times);
  report.options.horizon = samples.times.back();
  const double nyquist = std::numbers::pi / h;
  run_monte_carlo(report, samples.values, h, {}, -nyquist, nyquist, tol);
  return report;
}

FitResult fit_point_measure(const KernelSamples& samples, const FitOptions& options, const Tolerances& tol) {
  samples.validate();
  const std::size_t count = samples.times.size();
  const Index n1 = samples.dim();
  FitResult result;
  result.measure = PointMeasure(n1, {});

  double peak = 0;
  for (const auto& v : samples.values) peak = std::max(peak, max_abs(v));
  if (count == 0 || !(peak > 0)) return result;

  const double dt = uniform_step(samples.times);
  if (options.max_frequency && *options.max_frequency >= std::numbers::pi / dt) {
    std::ostringstream os;
    os << "Nyquist violation: max |omega| = " << *options.max_frequency << " >= pi/dt = " << std::numbers::pi / dt;
    throw PreconditionError(os.str());
  }

  Vector y(static_cast<Index>(count));
  for (std::size_t j = 0; j < count; ++j) y(static_cast<Index>(j)) = samples.values[j].trace();

  // Hankel pencil with pencil length half the sample count.
  const Index pencil = static_cast<Index>(count / 2);
  const Index rows = static_cast<Index>(count) - pencil;
  if (pencil < 1 || rows < 1) throw PreconditionError("too few samples for a matrix pencil");
  Matrix y0(rows, pencil), y1(rows, pencil);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < pencil; ++j) {
      y0(i, j) = y(i + j);
      y1(i, j) = y(i + j + 1);
    }
  }
  Eigen::BDCSVD<Matrix> hankel(y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sigma = hankel.singularValues();
  Index order = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > options.singular_cut * sigma(0)) ++order;
  }
  if (order == 0) throw NumericError("fit: trace sequence vanishes but samples do not (indefinite masses?)");
  if (static_cast<std::size_t>(order) > options.max_atoms) {
    throw NumericError("fit: pencil rank " + std::to_string(order) + " exceeds max_atoms " +
                       std::to_string(options.max_atoms));
  }
  const Matrix u = hankel.matrixU().leftCols(order);
  const Matrix v = hankel.matrixV().leftCols(order);
  const RealVector inv_sigma = sigma.head(order).cwiseInverse();
  const Matrix reduced = inv_sigma.cast<Complex>().asDiagonal() * (u.adjoint() * y1 * v);
  Eigen::ComplexEigenSolver<Matrix> pencil_eigs(reduced, false);
  if (pencil_eigs.info() != Eigen::Success) throw NumericError("fit: pencil eigenvalue problem did not converge");

  std::vector<double> freqs;
  for (Index k = 0; k < order; ++k) freqs.push_back(-std::arg(pencil_eigs.eigenvalues()(k)) / dt);
  std::sort(freqs.begin(), freqs.end());

  // Least-squares masses, one column per matrix entry.
  Matrix vander(static_cast<Index>(count), order);
  Matrix rhs(static_cast<Index>(count), n1 * n1);
  for (std::size_t j = 0; j < count; ++j) {
    for (Index k = 0; k < order; ++k) {
      vander(static_cast<Index>(j), k) = std::exp(-kI * freqs[static_cast<std::size_t>(k)] * samples.times[j]);
    }
    rhs.row(static_cast<Index>(j)) = samples.values[j].reshaped().transpose();
  }
  Eigen::BDCSVD<Matrix> ls(vander, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& vs = ls.singularValues();
  result.condition = vs(vs.size() - 1) > 0 ? vs(0) / vs(vs.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(result.condition < 1e12)) {
    std::ostringstream os;
    os << "fit: ill-conditioned frequency system (condition estimate " << result.condition << ")";
    throw NumericError(os.str());
  }
  const Matrix coeffs = ls.solve(rhs);

  std::vector<Atom> atoms;
  for (Index k = 0; k < order; ++k) {
    Matrix mass = coeffs.row(k).transpose().reshaped(n1, n1);
    mass = (mass + mass.adjoint()) / 2.0;
    const auto es = eigh(HermitianOperator(mass), tol);
    const RealVector clamped = es.values.cwiseMax(0.0);
    atoms.push_back({freqs[static_cast<std::size_t>(k)],
                     HermitianOperator(Matrix(es.vectors * clamped.cast<Complex>().asDiagonal() * es.vectors.adjoint()))});
  }
  result.measure = PointMeasure(n1, std::move(atoms), tol);
  for (std::size_t j = 0; j < count; ++j) {
    result.max_residual =
        std::max(result.max_residual, max_abs(Matrix(kernel_at(result.measure, samples.times[j]) - samples.values[j])));
  }
  return result;
}

}  // namespace openext
