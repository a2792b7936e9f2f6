#include <doctest.h>

#include "openext/decomposition.hpp"
#include "openext/hamiltonian.hpp"
#include "support.hpp"

using namespace openext;
using openext::testing::Rng;

namespace {

constexpr Complex kI{0.0, 1.0};

RealVector unit(Index n, Index i) {
  RealVector v = RealVector::Zero(n);
  v(i) = 1;
  return v;
}

Index eigenvalue_multiplicity(const HermitianOperator& op, double value, double tol = 1e-8) {
  const auto values = eigh(op).values;
  return ((values.array() - value).abs() < tol).count();
}

}  // namespace

TEST_CASE("frequency operator examples") {
  SUBCASE("single oscillator") {
    const QuadraticHamiltonian h(RealVector::Ones(1), RealMatrix::Constant(1, 1, 4.0));
    CHECK(frequency_operator(h).omega.matrix()(0, 0).real() == doctest::Approx(2.0));
  }
  SUBCASE("uncoupled pair") {
    RealMatrix k = RealMatrix::Zero(2, 2);
    k.diagonal() << 1, 4;
    const auto op = frequency_operator(QuadraticHamiltonian(RealVector::Ones(2), k)).omega;
    CHECK(max_abs(Matrix(op.matrix() - HermitianOperator::diagonal(RealVector{{1.0, 2.0}}).matrix())) < 1e-14);
  }
  SUBCASE("coupled pair") {
    RealMatrix k(2, 2);
    k << 2, -1, -1, 2;
    const auto values = eigh(frequency_operator(QuadraticHamiltonian(RealVector::Ones(2), k)).omega).values;
    CHECK(values(0) == doctest::Approx(1.0));
    CHECK(values(1) == doctest::Approx(std::sqrt(3.0)));
  }
  SUBCASE("singular stiffness reports zero modes") {
    RealMatrix k(2, 2);
    k << 1, -1, -1, 1;
    const auto op = frequency_operator(QuadraticHamiltonian(RealVector::Ones(2), k));
    CHECK(op.zero_modes);
    CHECK(eigh(op.omega).values(0) == doctest::Approx(0.0));
  }
  SUBCASE("indefinite stiffness is rejected") {
    RealMatrix k(2, 2);
    k << 1, 0, 0, -1;
    CHECK_THROWS_AS(QuadraticHamiltonian(RealVector::Ones(2), k), PreconditionError);
    CHECK_THROWS_AS(QuadraticHamiltonian(-RealVector::Ones(2), RealMatrix::Identity(2, 2)), ValidationError);
  }
}

TEST_CASE("encoding fidelity against velocity Verlet") {
  Rng rng(41);
  for (int trial = 0; trial < 3; ++trial) {
    const Index n = 3;
    const RealMatrix b = openext::testing::random_real(rng, n, n);
    const RealMatrix k = b * b.transpose() / 3.0 + 0.5 * RealMatrix::Identity(n, n);
    RealVector m(n);
    for (Index i = 0; i < n; ++i) m(i) = openext::testing::uniform(rng, 0.5, 2.0);
    const QuadraticHamiltonian h(m, k);
    const Matrix omega = frequency_operator(h).omega.matrix();
    const auto es = eigh(HermitianOperator(omega));
    const RealVector sqrt_m = m.cwiseSqrt();

    RealVector q = openext::testing::random_real(rng, n, 1);
    RealVector p = openext::testing::random_real(rng, n, 1);  // Q′
    const auto encode = [&](const RealVector& pos, const RealVector& vel) -> Vector {
      return sqrt_m.cwiseProduct(vel).cast<Complex>() - kI * (omega * sqrt_m.cwiseProduct(pos).cast<Complex>());
    };
    const Vector z0 = encode(q, p);
    const RealVector minv = m.cwiseInverse();
    const double dt = 2e-4;
    const int steps = 50000;  // t ∈ [0, 10]
    RealVector acc = -minv.cwiseProduct(k * q);
    double worst = 0;
    for (int s = 1; s <= steps; ++s) {
      p += 0.5 * dt * acc;
      q += dt * p;
      acc = -minv.cwiseProduct(k * q);
      p += 0.5 * dt * acc;
      if (s % 5000 == 0) {
        const double t = s * dt;
        const Vector phase = (-kI * es.values.cast<Complex>() * t).array().exp();
        const Vector exact = es.vectors * phase.asDiagonal() * es.vectors.adjoint() * z0;
        worst = std::max(worst, (exact - encode(q, p)).norm());
      }
    }
    CHECK(worst <= 1e-6 * std::max(1.0, z0.norm()));
  }
}

TEST_CASE("oscillator frozen directions") {
  SUBCASE("gamma along e₂ freezes e₁") {
    OscillatorSpec spec;
    spec.n = 2;
    spec.gamma1 = {unit(2, 1)};
    spec.gamma2 = {unit(3, 0)};
    RealMatrix hidden_k(3, 3);
    hidden_k << 2, -0.5, 0, -0.5, 3, -0.7, 0, -0.7, 4.1;
    const auto s = oscillator_system(spec, QuadraticHamiltonian(RealVector::Ones(3), hidden_k));
    const auto p = coupled_parts(s);
    CHECK(p.h1d.dim() >= 1);
    CHECK(coupling_span_dim(spec.gamma1, 2) == 1);
    Matrix e1 = Matrix::Zero(s.dim(), 1);
    e1(0, 0) = 1;
    CHECK(contains(p.h1d, e1));
  }
  SUBCASE("generic gamma freezes a rotated direction only") {
    OscillatorSpec spec;
    spec.n = 2;
    spec.gamma1 = {RealVector{{0.6, 0.8}}};
    spec.gamma2 = {RealVector{{1.0, 0.3, -0.2}}};
    RealMatrix hidden_k(3, 3);
    hidden_k << 2, -0.5, 0, -0.5, 3, -0.7, 0, -0.7, 4.1;
    const auto s = oscillator_system(spec, QuadraticHamiltonian(RealVector::Ones(3), hidden_k));
    const auto p = coupled_parts(s);
    CHECK(p.h1d.dim() == 1);
    for (Index i = 0; i < 2; ++i) {
      Matrix e = Matrix::Zero(s.dim(), 1);
      e(i, 0) = 1;
      CHECK_FALSE(contains(p.h1d, e));
    }
  }
  SUBCASE("no interaction decouples everything") {
    OscillatorSpec spec;
    spec.n = 3;
    const auto s = oscillator_system(spec, QuadraticHamiltonian(RealVector::Ones(2), RealMatrix::Identity(2, 2)));
    CHECK(max_abs(s.gamma()) == 0);
    CHECK(coupled_parts(s).h1d.dim() == 3);
  }
  SUBCASE("random draws respect dim h1d ≥ N − dim span γ") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      OscillatorSpec spec;
      spec.n = 2 + trial % 4;
      const Index g = 2 + trial % 3;
      const Index j = 1 + trial % static_cast<int>(spec.n - 1);
      for (Index q = 0; q < j; ++q) {
        spec.gamma1.push_back(openext::testing::random_real(rng, spec.n, 1));
        spec.gamma2.push_back(openext::testing::random_real(rng, g, 1));
      }
      const RealMatrix b = openext::testing::random_real(rng, g, g);
      const auto s = oscillator_system(spec, QuadraticHamiltonian(RealVector::Ones(g), b * b.transpose() + RealMatrix::Identity(g, g)));
      CHECK(coupled_parts(s).h1d.dim() >= spec.n - coupling_span_dim(spec.gamma1, spec.n));
    }
  }
}

TEST_CASE("lattice assembly") {
  SUBCASE("single site") {
    LatticeSpec spec;
    spec.gammas = {unit(1, 0)};
    spec.stiffness = 1.5;
    const auto model = lattice_system(spec);
    // One forward neighbour outside the cube: x² counted once, K = ξ + 2.
    CHECK(model.site_form(0, 0) == 1.0);
    CHECK(model.hamiltonian.stiffness()(0, 0) == doctest::Approx(3.5));
    CHECK(model.omega.matrix()(0, 0).real() == doctest::Approx(std::sqrt(3.5)));
  }
  SUBCASE("d=1, L=1, N=2 has eigenvalue 1 with multiplicity ≥ 3") {
    LatticeSpec spec;
    spec.L = 1;
    spec.n = 2;
    spec.gammas = {unit(2, 1)};
    const auto model = lattice_system(spec);
    CHECK(model.omega.dim() == 6);
    CHECK(model.sites.size() == 3);
    CHECK(model.sites[0] == std::vector<int>{-1});
    CHECK(eigenvalue_multiplicity(model.omega, 1.0) >= 3);
    CHECK(model.site_form.isApprox(model.site_form.transpose()));
  }
  SUBCASE("budget and validation") {
    LatticeSpec spec;
    spec.d = 3;
    spec.L = 10;
    spec.n = 2;
    spec.gammas = {unit(2, 0)};
    CHECK_THROWS_AS(lattice_system(spec), PreconditionError);
    spec.gammas.clear();
    CHECK_THROWS_AS(lattice_system(spec), ValidationError);
  }
}

TEST_CASE("frozen reports") {
  SUBCASE("d=1, L=1, N=2, J=1") {
    LatticeSpec spec;
    spec.L = 1;
    spec.n = 2;
    spec.gammas = {unit(2, 1)};
    const auto r = frozen_report(spec);
    CHECK(r.frozen_dim_complex == 3);
    CHECK(r.frozen_dim_real == 6);
    CHECK(r.frozen_frequency == doctest::Approx(1.0));
    CHECK(r.frozen_exact);
    CHECK(r.dim_bound_satisfied);
    CHECK(r.mult_upper == 3);
    CHECK(r.coupled_max_mult <= 3);
    CHECK(r.mult_bound_satisfied);
  }
  SUBCASE("d=1, L=4, N=3, J=1") {
    LatticeSpec spec;
    spec.L = 4;
    spec.n = 3;
    spec.gammas = {unit(3, 2)};
    const auto r = frozen_report(spec);
    CHECK(r.frozen_dim_complex >= 18);
    CHECK(r.mult_upper == 9);
    CHECK(r.coupled_max_mult <= 9);
    CHECK(r.full_multiplicity_at_frequency >= 18);
    const auto model = lattice_system(spec);
    CHECK(eigenvalue_multiplicity(model.omega, 1.0) >= 18);
    CHECK(multiplicity(model.omega, r.frozen_subspace).max_mult == r.frozen_dim_complex);
  }
  SUBCASE("spanning gammas leave nothing frozen") {
    LatticeSpec spec;
    spec.L = 1;
    spec.n = 2;
    spec.gammas = {unit(2, 0), RealVector{{1.0, 1.0}}};
    const auto r = frozen_report(spec);
    CHECK(r.frozen_dim_complex == 0);
    CHECK(r.span_dim == 2);
  }
  SUBCASE("frozen eigenvectors are exact for random specs") {
    Rng rng(43);
    for (int trial = 0; trial < 6; ++trial) {
      LatticeSpec spec;
      spec.d = 1 + trial % 2;
      spec.L = 1;
      spec.n = 3;
      spec.mass = openext::testing::uniform(rng, 0.5, 2.0);
      spec.stiffness = openext::testing::uniform(rng, 0.5, 2.0);
      spec.gammas = {openext::testing::random_real(rng, 3, 1)};
      const auto r = frozen_report(spec);
      CHECK(r.frozen_exact);
      CHECK(r.frozen_dim_complex == 2 * r.volume);
      CHECK(r.mult_bound_satisfied);
    }
  }
}

TEST_CASE("multiplicity scan") {
  LatticeSpec spec;
  spec.n = 2;
  spec.gammas = {unit(2, 1)};
  const auto rows = multiplicity_scan(spec, {1, 2, 3, 4});
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.volume == 2 * r.L + 1);
    CHECK(r.ratio == doctest::Approx(static_cast<double>(r.max_mult) / r.volume));
  }
  CHECK(multiplicity_scan(spec, {2}).size() == 1);
  LatticeSpec planar = spec;
  planar.d = 2;
  CHECK(multiplicity_scan(planar, {1, 2}).size() == 2);
}
