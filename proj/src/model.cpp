#include "openext/model.hpp"

#include <algorithm>
#include <sstream>

namespace openext {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

ConservativeSystem ConservativeSystem::assemble(const HermitianOperator& omega1, const HermitianOperator& omega2,
                                                const Matrix& gamma, const Tolerances& tol) {
  if (gamma.rows() != omega1.dim() || gamma.cols() != omega2.dim()) {
    throw ValidationError("assemble: coupling has shape " + shape(gamma) + ", expected " +
                          std::to_string(omega1.dim()) + "x" + std::to_string(omega2.dim()));
  }
  if (!gamma.allFinite()) throw ValidationError("assemble: coupling has non-finite entries");
  const Index n1 = omega1.dim();
  const Index n = n1 + omega2.dim();
  Matrix omega(n, n);
  omega.topLeftCorner(n1, n1) = omega1.matrix();
  omega.topRightCorner(n1, n - n1) = gamma;
  omega.bottomLeftCorner(n - n1, n1) = gamma.adjoint();
  omega.bottomRightCorner(n - n1, n - n1) = omega2.matrix();
  return ConservativeSystem(HermitianOperator(omega, tol), n1);
}

ConservativeSystem ConservativeSystem::from_matrix(const Matrix& omega, Index n1, const Tolerances& tol) {
  const auto report = validate_system(omega, n1, tol);
  if (!report.ok()) throw ValidationError(report.violations.front().message);
  return ConservativeSystem(HermitianOperator(omega, tol), n1);
}

ConservativeSystem ConservativeSystem::from_mass_and_generator(const Matrix& mass, const Matrix& a, Index n1,
                                                               const Tolerances& tol) {
  if (mass.rows() != a.rows() || mass.cols() != a.cols()) {
    throw ValidationError("mass has shape " + shape(mass) + " but generator has shape " + shape(a));
  }
  if (n1 < 0 || n1 > mass.rows()) throw ValidationError("observable dimension out of range");
  const Index n2 = mass.rows() - n1;
  if (max_abs(mass.topRightCorner(n1, n2)) > tol.herm * (1 + max_abs(mass))) {
    throw ValidationError("mass operator couples H1 and H2; it must be block-diagonal");
  }
  const Matrix w = inverse_sqrt_mass(mass, tol);
  return from_matrix(w * a * w, n1, tol);
}

HermitianOperator ConservativeSystem::omega1() const {
  return HermitianOperator(Matrix(omega_.matrix().topLeftCorner(n1_, n1_)));
}

HermitianOperator ConservativeSystem::omega2() const {
  return HermitianOperator(Matrix(omega_.matrix().bottomRightCorner(n2(), n2())));
}

Matrix ConservativeSystem::gamma() const { return omega_.matrix().topRightCorner(n1_, n2()); }

HermitianOperator ConservativeSystem::diagonal_part() const {
  Matrix d = omega_.matrix();
  d.topRightCorner(n1_, n2()).setZero();
  d.bottomLeftCorner(n2(), n1_).setZero();
  return HermitianOperator(d);
}

HermitianOperator ConservativeSystem::off_diagonal_part() const {
  Matrix d = omega_.matrix();
  d.topLeftCorner(n1_, n1_).setZero();
  d.bottomRightCorner(n2(), n2()).setZero();
  return HermitianOperator(d);
}

Subspace ConservativeSystem::observable_space() const {
  return Subspace(embed_observable(Matrix::Identity(n1_, n1_)));
}

Subspace ConservativeSystem::hidden_space() const { return Subspace(embed_hidden(Matrix::Identity(n2(), n2()))); }

Matrix ConservativeSystem::embed_observable(const Matrix& frame) const {
  if (frame.rows() != n1_) throw ValidationError("embed_observable: frame has " + std::to_string(frame.rows()) + " rows");
  Matrix out = Matrix::Zero(dim(), frame.cols());
  out.topRows(n1_) = frame;
  return out;
}

Matrix ConservativeSystem::embed_hidden(const Matrix& frame) const {
  if (frame.rows() != n2()) throw ValidationError("embed_hidden: frame has " + std::to_string(frame.rows()) + " rows");
  Matrix out = Matrix::Zero(dim(), frame.cols());
  out.bottomRows(n2()) = frame;
  return out;
}

// ---------------------------------------------------------------------------

PointMeasure::PointMeasure(Index dim, std::vector<Atom> atoms, const Tolerances& tol) : dim_(dim) {
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (atoms[k].mass.dim() != dim) {
      throw ValidationError("atom " + std::to_string(k) + " has mass of dimension " +
                            std::to_string(atoms[k].mass.dim()) + ", expected " + std::to_string(dim));
    }
    if (!std::isfinite(atoms[k].frequency)) throw ValidationError("atom " + std::to_string(k) + " has non-finite frequency");
  }
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.frequency < b.frequency; });
  const double span = atoms.empty() ? 0.0 : atoms.back().frequency - atoms.front().frequency;
  const double merge_gap = tol.eig_cluster * span;
  for (auto& atom : atoms) {
    if (!atoms_.empty() && atom.frequency - atoms_.back().frequency <= merge_gap) {
      auto& last = atoms_.back();
      const double w_last = std::max(last.mass.matrix().trace().real(), 0.0);
      const double w_new = std::max(atom.mass.matrix().trace().real(), 0.0);
      last.frequency = (w_last + w_new > 0) ? (w_last * last.frequency + w_new * atom.frequency) / (w_last + w_new)
                                            : 0.5 * (last.frequency + atom.frequency);
      last.mass = HermitianOperator(Matrix(last.mass.matrix() + atom.mass.matrix()));
    } else {
      atoms_.push_back(std::move(atom));
    }
  }
}

Matrix PointMeasure::total_mass() const {
  Matrix total = Matrix::Zero(dim_, dim_);
  for (const auto& atom : atoms_) total += atom.mass.matrix();
  return total;
}

// ---------------------------------------------------------------------------

OpenSystem::OpenSystem(HermitianOperator omega1, PointMeasure kernel, const std::optional<Matrix>& instantaneous)
    : omega1_(std::move(omega1)), kernel_(std::move(kernel)) {
  if (instantaneous && max_abs(*instantaneous) > 0) {
    throw UnsupportedError("unbounded coupling unsupported: instantaneous friction a_inf must be zero");
  }
  if (kernel_.dim() != omega1_.dim() && !(kernel_.empty() && kernel_.dim() == 0)) {
    throw ValidationError("kernel dimension " + std::to_string(kernel_.dim()) + " does not match Omega1 dimension " +
                          std::to_string(omega1_.dim()));
  }
  if (kernel_.dim() != omega1_.dim()) kernel_ = PointMeasure(omega1_.dim(), {});
}

OpenSystem OpenSystem::from_mass(const Matrix& mass, const Matrix& a, const PointMeasure& kernel,
                                 const Tolerances& tol) {
  const Matrix w = inverse_sqrt_mass(mass, tol);
  if (a.rows() != w.rows() || a.cols() != w.cols()) throw ValidationError("generator and mass shapes differ");
  std::vector<Atom> atoms;
  for (const auto& atom : kernel.atoms()) {
    atoms.push_back({atom.frequency, HermitianOperator(Matrix(w * atom.mass.matrix() * w), tol)});
  }
  return OpenSystem(HermitianOperator(Matrix(w * a * w), tol), PointMeasure(w.rows(), std::move(atoms), tol));
}

// ---------------------------------------------------------------------------

BlockPartition::BlockPartition(int side, Index side_dim, std::vector<Subspace> parts, const Tolerances& tol)
    : side_(side), side_dim_(side_dim), parts_(std::move(parts)) {
  if (side != 1 && side != 2) throw ValidationError("partition side must be 1 or 2");
  Index total = 0;
  for (std::size_t a = 0; a < parts_.size(); ++a) {
    if (parts_[a].ambient_dim() != side_dim) {
      throw ValidationError("partition part " + std::to_string(a) + " lives in dimension " +
                            std::to_string(parts_[a].ambient_dim()) + ", expected " + std::to_string(side_dim));
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (max_abs(Matrix(parts_[a].frame().adjoint() * parts_[b].frame())) > tol.orth) {
        throw ValidationError("partition parts " + std::to_string(b) + " and " + std::to_string(a) +
                              " are not orthogonal");
      }
    }
    total += parts_[a].dim();
  }
  complete_ = total == side_dim;
}

// ---------------------------------------------------------------------------

ValidationReport validate_system(const Matrix& omega, Index n1, const Tolerances& tol) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message, double magnitude) {
    report.violations.push_back({std::move(code), std::move(message), magnitude, std::nullopt});
  };
  if (omega.rows() != omega.cols()) {
    add("shape", "generator is not square: " + shape(omega), 0);
    return report;
  }
  if (!omega.allFinite()) {
    add("finite", "generator has non-finite entries", 0);
    return report;
  }
  if (n1 < 0 || n1 > omega.rows()) {
    add("shape", "n1 = " + std::to_string(n1) + " exceeds dimension " + std::to_string(omega.rows()), 0);
    return report;
  }
  const Index n2 = omega.rows() - n1;
  const double bound = tol.herm * (1 + max_abs(omega));
  const double d1 = max_abs(Matrix(omega.topLeftCorner(n1, n1) - omega.topLeftCorner(n1, n1).adjoint()));
  const double d2 = max_abs(Matrix(omega.bottomRightCorner(n2, n2) - omega.bottomRightCorner(n2, n2).adjoint()));
  const double dg = max_abs(Matrix(omega.bottomLeftCorner(n2, n1) - omega.topRightCorner(n1, n2).adjoint()));
  auto describe = [](const char* what, double v) {
    std::ostringstream os;
    os << what << " (max deviation " << v << ")";
    return os.str();
  };
  if (d1 > bound) add("hermitian_omega1", describe("Omega1 block is not Hermitian", d1), d1);
  if (d2 > bound) add("hermitian_omega2", describe("Omega2 block is not Hermitian", d2), d2);
  if (dg > bound) add("hermitian_coupling", describe("omega is not Hermitian: bottom-left block differs from Gamma^H", dg), dg);
  return report;
}

ValidationReport validate(const ConservativeSystem& system, const Tolerances& tol) {
  return validate_system(system.omega().matrix(), system.n1(), tol);
}

ValidationReport validate(const PointMeasure& measure, const Tolerances& tol) {
  ValidationReport report;
  double largest = 0;
  std::vector<double> mins;
  for (const auto& atom : measure.atoms()) {
    const auto values = eigh(atom.mass, tol).values;
    mins.push_back(values.size() ? values.minCoeff() : 0.0);
    if (values.size()) largest = std::max(largest, values.cwiseAbs().maxCoeff());
  }
  const double floor = -tol.residual * (largest > 0 ? largest : 1.0);
  for (std::size_t k = 0; k < mins.size(); ++k) {
    if (mins[k] < floor) {
      std::ostringstream os;
      os << "atom " << k << " (omega = " << measure.atoms()[k].frequency
         << ") is not positive semidefinite: min eigenvalue " << mins[k];
      report.violations.push_back({"psd", os.str(), mins[k], k});
    }
  }
  return report;
}

ValidationReport validate(const OpenSystem& open, const Tolerances& tol) {
  auto report = validate(open.kernel(), tol);
  if (open.kernel().dim() != open.dim()) {
    report.violations.push_back({"shape", "kernel dimension does not match Omega1", 0, std::nullopt});
  }
  return report;
}

Matrix inverse_sqrt_mass(const Matrix& mass, const Tolerances& tol) {
  const HermitianOperator m(mass, tol);
  const auto es = eigh(m, tol);
  if (es.values.size() && !(es.values.minCoeff() > 0)) {
    throw ValidationError("mass operator must be positive definite");
  }
  const RealVector inv = es.values.cwiseSqrt().cwiseInverse();
  return es.vectors * inv.cast<Complex>().asDiagonal() * es.vectors.adjoint();
}

}  // namespace openext
