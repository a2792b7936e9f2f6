#include <doctest.h>

#include "openext/decomposition.hpp"
#include "openext/extension.hpp"
#include "support.hpp"

using namespace openext;
using openext::testing::Rng;

namespace {

constexpr Complex kI{0.0, 1.0};

ConservativeSystem ex_a() {
  Matrix gamma(2, 2);
  gamma << 1, 1, 0, 0;
  return ConservativeSystem::assemble(HermitianOperator::diagonal(RealVector{{0.0, 3.0}}),
                                      HermitianOperator::diagonal(RealVector{{1.0, 2.0}}), gamma);
}

Matrix e11(Index n) {
  Matrix m = Matrix::Zero(n, n);
  m(0, 0) = 1;
  return m;
}

PointMeasure random_measure(Rng& rng, Index dim, int atoms, double gap = 0.0) {
  std::vector<Atom> out;
  for (int k = 0; k < atoms; ++k) {
    const Index rank = 1 + static_cast<Index>(rng() % static_cast<unsigned>(dim));
    const Matrix c = openext::testing::random_complex(rng, dim, rank);
    const double omega = gap > 0 ? gap * k + openext::testing::uniform(rng, 0, 0.1)
                                 : openext::testing::uniform(rng, -3, 3);
    out.push_back({omega, HermitianOperator(Matrix(c * c.adjoint()))});
  }
  return PointMeasure(dim, std::move(out));
}

/// Σ_k e^{−iω_k t}·N_k evaluated directly.
Matrix direct_kernel(const PointMeasure& m, double t) {
  Matrix a = Matrix::Zero(m.dim(), m.dim());
  for (const auto& atom : m.atoms()) a += std::exp(-kI * atom.frequency * t) * atom.mass.matrix();
  return a;
}

}  // namespace

TEST_CASE("kernel_eval on EX-A is the two-atom sum") {
  const auto times = linspace(0, 10, 41);
  const auto k = kernel_eval(ex_a(), times);
  REQUIRE(k.values.size() == times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    const Complex c = std::exp(-kI * times[j]) + std::exp(-2.0 * kI * times[j]);
    CHECK(max_abs(Matrix(k.values[j] - c * e11(2))) < 1e-12);
  }
}

TEST_CASE("hidden kernel of EX-A is constant") {
  const auto k = kernel_eval_hidden(ex_a(), linspace(0, 7, 15));
  for (const auto& a : k.values) CHECK(max_abs(Matrix(a - Matrix::Ones(2, 2))) < 1e-12);
}

TEST_CASE("zero coupling gives a zero kernel") {
  const auto s = ConservativeSystem::assemble(HermitianOperator::identity(2), HermitianOperator::identity(3),
                                              Matrix::Zero(2, 3));
  for (const auto& a : kernel_eval(s, linspace(0, 5, 6)).values) CHECK(max_abs(a) == 0);
}

TEST_CASE("kernel symmetry a(t)† = Γe^{+iΩ₂t}Γ† and a(0) = ΓΓ†") {
  Rng rng(21);
  const HermitianOperator o2(openext::testing::random_hermitian(rng, 4));
  const auto s = ConservativeSystem::assemble(HermitianOperator::zero(3), o2, openext::testing::random_complex(rng, 3, 4));
  const auto k = kernel_eval(s, linspace(0, 3, 7));
  CHECK(max_abs(Matrix(k.values[0] - s.gamma() * s.gamma().adjoint())) < 1e-12);
  const auto es = eigh(o2);
  for (std::size_t j = 0; j < k.times.size(); ++j) {
    const Vector phase = (kI * es.values.cast<Complex>() * k.times[j]).array().exp();
    const Matrix forward = s.gamma() * es.vectors * phase.asDiagonal() * es.vectors.adjoint() * s.gamma().adjoint();
    CHECK(max_abs(Matrix(k.values[j].adjoint() - forward)) < 1e-10);
  }
}

TEST_CASE("minimal_extension of a scalar atom") {
  const PointMeasure m(1, {{2.0, HermitianOperator::identity(1)}});
  const auto s = minimal_extension(m);
  CHECK(s.n1() == 1);
  CHECK(s.n2() == 1);
  CHECK(s.omega2().matrix()(0, 0).real() == doctest::Approx(2.0));
  CHECK(std::abs(s.gamma()(0, 0)) == doctest::Approx(1.0));
  CHECK(max_abs(s.omega1().matrix()) == 0);
  const auto k = kernel_eval(s, {0.7});
  CHECK(std::abs(k.values[0](0, 0) - std::exp(-2.0 * kI * 0.7)) < 1e-14);
}

TEST_CASE("minimal_extension recovers the hidden half of EX-A") {
  const PointMeasure m(2, {{1.0, HermitianOperator(e11(2))}, {2.0, HermitianOperator(e11(2))}});
  const auto s = minimal_extension(m);
  CHECK(s.n2() == 2);
  CHECK(max_abs(Matrix(s.omega2().matrix() - HermitianOperator::diagonal(RealVector{{1.0, 2.0}}).matrix())) < 1e-15);
  Matrix gamma(2, 2);
  gamma << 1, 1, 0, 0;
  CHECK(max_abs(Matrix(s.gamma() - gamma)) < 1e-15);
}

TEST_CASE("rank-2 atom gives a 2-dim block") {
  Rng rng(8);
  const Matrix c = openext::testing::random_complex(rng, 3, 2);
  const PointMeasure m(3, {{0.5, HermitianOperator(Matrix(c * c.adjoint()))}});
  const auto s = minimal_extension(m);
  CHECK(s.n2() == 2);
  const auto times = linspace(0, 10, 100);
  const auto k = kernel_eval(s, times);
  for (std::size_t j = 0; j < times.size(); ++j) CHECK(max_abs(Matrix(k.values[j] - direct_kernel(m, times[j]))) < 1e-12);
}

TEST_CASE("minimal_extension rejects indefinite atoms") {
  Matrix mass(2, 2);
  mass << 1, 0, 0, -0.5;
  const PointMeasure m(2, {{1.0, HermitianOperator(mass)}});
  try {
    (void)minimal_extension(m);
    FAIL("expected DissipationError");
  } catch (const DissipationError& e) {
    CHECK(e.atom() == 0);
    CHECK(e.min_eigenvalue() == doctest::Approx(-0.5));
  }
}

TEST_CASE("extension reproduces the kernel and is minimal") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_measure(rng, 1 + trial % 5, 1 + trial % 6);
    const auto s = minimal_extension(m);
    const auto times = linspace(0, 10, 100);
    const auto k = kernel_eval(s, times);
    const double scale = operator_norm(m.total_mass());
    for (std::size_t j = 0; j < times.size(); ++j) {
      CHECK(max_abs(Matrix(k.values[j] - direct_kernel(m, times[j]))) <= 1e-10 * scale);
    }
    const Subspace seed = orthonormal_basis(Matrix(s.gamma().adjoint()));
    CHECK(orbit(s.omega2(), seed).dim() == s.n2());

    const auto back = measure_of(s);
    REQUIRE(back.size() == m.size());
    for (std::size_t a = 0; a < m.size(); ++a) {
      CHECK(std::abs(back.atoms()[a].frequency - m.atoms()[a].frequency) < 1e-9);
      CHECK(max_abs(Matrix(back.atoms()[a].mass.matrix() - m.atoms()[a].mass.matrix())) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("measure_of EX-A and dropping a decoupled hidden mode") {
  const auto m = measure_of(ex_a());
  REQUIRE(m.size() == 2);
  CHECK(m.atoms()[0].frequency == doctest::Approx(1.0));
  CHECK(m.atoms()[1].frequency == doctest::Approx(2.0));
  for (const auto& a : m.atoms()) CHECK(max_abs(Matrix(a.mass.matrix() - e11(2))) < 1e-12);

  Matrix gamma(1, 2);
  gamma << 1, 0;
  const auto s = ConservativeSystem::assemble(HermitianOperator::zero(1),
                                              HermitianOperator::diagonal(RealVector{{1.0, 4.0}}), gamma);
  const auto dropped = measure_of(s);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped.atoms()[0].frequency == doctest::Approx(1.0));
}

TEST_CASE("systems with equal measures have equal kernels") {
  Rng rng(4);
  const auto m = random_measure(rng, 2, 3, 1.0);
  const auto s = minimal_extension(m);
  // Pad the hidden space with decoupled modes and rotate it.
  const Index extra = 2;
  const Index n2 = s.n2() + extra;
  Matrix o2 = Matrix::Zero(n2, n2);
  o2.topLeftCorner(s.n2(), s.n2()) = s.omega2().matrix();
  o2.bottomRightCorner(extra, extra) = openext::testing::random_hermitian(rng, extra);
  Matrix g = Matrix::Zero(s.n1(), n2);
  g.leftCols(s.n2()) = s.gamma();
  const Matrix w = openext::testing::random_unitary(rng, n2);
  const auto t = ConservativeSystem::assemble(s.omega1(), HermitianOperator(Matrix(w.adjoint() * o2 * w)), Matrix(g * w));
  const auto times = linspace(0, 8, 50);
  const auto ks = kernel_eval(s, times);
  const auto kt = kernel_eval(t, times);
  for (std::size_t j = 0; j < times.size(); ++j) CHECK(max_abs(Matrix(ks.values[j] - kt.values[j])) < 1e-9);
}

TEST_CASE("dissipation check") {
  SUBCASE("PSD measures pass both checks") {
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
      const auto r = check_dissipation(random_measure(rng, 3, 4));
      CHECK(r.algebraic_checked);
      CHECK(r.algebraic_pass);
      CHECK(r.monte_carlo_pass);
      CHECK(r.pass());
      CHECK(r.trials.size() == 32);
      for (const auto& t : r.trials) CHECK(t.normalized >= -1e-9);
    }
  }
  SUBCASE("planted indefinite atom is named") {
    Matrix bad(2, 2);
    bad << 1, 0, 0, -0.5;
    const PointMeasure m(2, {{-2.0, HermitianOperator::identity(2)}, {2.0, HermitianOperator(bad)}});
    const auto r = check_dissipation(m);
    CHECK_FALSE(r.pass());
    REQUIRE(r.witness_atom.has_value());
    CHECK(*r.witness_atom == 1);
    CHECK(r.witness_min_eigenvalue == doctest::Approx(-0.5));
    CHECK_FALSE(r.monte_carlo_pass);
    CHECK(r.first_negative_trial.has_value());
  }
  SUBCASE("weak indefinite atom between heavy neighbours is found by Monte-Carlo") {
    Matrix bad(2, 2);
    bad << 1.8, 0, 0, -0.47;
    const Matrix heavy = 6.0 * Matrix::Identity(2, 2);
    const PointMeasure m(2, {{-1.0, HermitianOperator(heavy)}, {0.0, HermitianOperator(bad)},
                             {0.8, HermitianOperator(heavy)}});
    const auto r = check_dissipation(m);
    CHECK(*r.witness_atom == 1);
    CHECK_FALSE(r.monte_carlo_pass);
  }
  SUBCASE("heavy neighbours alone stay non-negative") {
    const Matrix heavy = 6.0 * Matrix::Identity(2, 2);
    const PointMeasure m(2, {{-1.0, HermitianOperator(heavy)}, {0.0, HermitianOperator::identity(2)},
                             {0.8, HermitianOperator(heavy)}});
    CHECK(check_dissipation(m).monte_carlo_pass);
  }
  SUBCASE("empty measure passes") {
    const auto r = check_dissipation(PointMeasure(2, {}));
    CHECK(r.pass());
    CHECK(r.monte_carlo_pass);
  }
  SUBCASE("samples variant agrees with the measure variant") {
    Rng rng(5);
    const auto good = random_measure(rng, 2, 3, 2.0);
    const auto samples = kernel_eval(good, linspace(0, 5, 200));
    CHECK(check_dissipation(samples).pass());
    CHECK_FALSE(check_dissipation(samples).algebraic_checked);
  }
  SUBCASE("reproducible under a fixed seed") {
    Rng rng(6);
    const auto m = random_measure(rng, 2, 2);
    const auto a = check_dissipation(m);
    const auto b = check_dissipation(m);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) CHECK(a.trials[i].value == b.trials[i].value);
  }
}

TEST_CASE("fit_point_measure") {
  SUBCASE("single scalar atom") {
    const PointMeasure m(1, {{2.0, HermitianOperator::identity(1)}});
    std::vector<double> times;
    for (int j = 0; j < 64; ++j) times.push_back(0.1 * j);
    const auto fit = fit_point_measure(kernel_eval(m, times));
    REQUIRE(fit.measure.size() == 1);
    CHECK(std::abs(fit.measure.atoms()[0].frequency - 2.0) < 1e-8);
    CHECK(std::abs(fit.measure.atoms()[0].mass.matrix()(0, 0) - 1.0) < 1e-8);
  }
  SUBCASE("EX-A kernel") {
    std::vector<double> times;
    for (int j = 0; j < 64; ++j) times.push_back(0.1 * j);
    const auto fit = fit_point_measure(kernel_eval(ex_a(), times));
    REQUIRE(fit.measure.size() == 2);
    CHECK(std::abs(fit.measure.atoms()[0].frequency - 1.0) < 1e-8);
    CHECK(std::abs(fit.measure.atoms()[1].frequency - 2.0) < 1e-8);
    for (const auto& a : fit.measure.atoms()) CHECK(max_abs(Matrix(a.mass.matrix() - e11(2))) < 1e-8);
  }
  SUBCASE("zero samples give an empty measure") {
    KernelSamples s;
    s.times = linspace(0, 1, 11);
    s.values.assign(11, Matrix::Zero(2, 2));
    CHECK(fit_point_measure(s).measure.empty());
  }
  SUBCASE("Nyquist and too many atoms") {
    const PointMeasure m(1, {{1.0, HermitianOperator::identity(1)}, {2.5, HermitianOperator::identity(1)}});
    const auto samples = kernel_eval(m, linspace(0, 6.3, 64));
    FitOptions nyquist;
    nyquist.max_frequency = 40.0;
    CHECK_THROWS_AS(fit_point_measure(samples, nyquist), PreconditionError);
    FitOptions small;
    small.max_atoms = 1;
    CHECK_THROWS_AS(fit_point_measure(samples, small), NumericError);
  }
  SUBCASE("non-uniform grid is rejected") {
    KernelSamples s;
    s.times = {0.0, 0.1, 0.3, 0.4};
    s.values.assign(4, Matrix::Identity(1, 1));
    CHECK_THROWS_AS(fit_point_measure(s), ValidationError);
  }
}
