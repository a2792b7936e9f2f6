#include <doctest.h>

#include <numbers>

#include "openext/coupling.hpp"
#include "openext/decomposition.hpp"
#include "openext/extension.hpp"
#include "support.hpp"

using namespace openext;
using openext::testing::Rng;

namespace {

ConservativeSystem ex_a() {
  Matrix gamma(2, 2);
  gamma << 1, 1, 0, 0;
  return ConservativeSystem::assemble(HermitianOperator::diagonal(RealVector{{0.0, 3.0}}),
                                      HermitianOperator::diagonal(RealVector{{1.0, 2.0}}), gamma);
}

Matrix unit(Index n, Index i) {
  Matrix v = Matrix::Zero(n, 1);
  v(i, 0) = 1;
  return v;
}

BlockPartition coordinates(int side, Index n) {
  std::vector<Subspace> parts;
  for (Index i = 0; i < n; ++i) parts.emplace_back(unit(n, i));
  return BlockPartition(side, n, std::move(parts));
}

}  // namespace

TEST_CASE("channels of EX-A") {
  const auto c = channels(ex_a());
  REQUIRE(c.rank == 1);
  CHECK(c.gammas(0) == doctest::Approx(2.0));
  CHECK(std::abs(std::abs(c.g(0, 0)) - 1.0) < 1e-14);
  CHECK(std::abs(c.g(1, 0)) < 1e-14);
  CHECK(std::abs(c.g_prime(0, 0) - c.g_prime(1, 0)) < 1e-14);
  CHECK(std::abs(std::abs(c.g_prime(0, 0)) - 1 / std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("channels of a diagonal coupling") {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 3;
  g(1, 1) = 1;
  const auto s = ConservativeSystem::assemble(HermitianOperator::zero(2), HermitianOperator::zero(2), g);
  const auto c = channels(s);
  REQUIRE(c.rank == 2);
  CHECK(c.gammas(0) == doctest::Approx(9.0));
  CHECK(c.gammas(1) == doctest::Approx(1.0));
  CHECK(max_abs(Matrix(c.g.cwiseAbs().cast<Complex>() - Matrix::Identity(2, 2))) < 1e-14);
  CHECK(c.degenerate_groups.empty());

  const auto zero = channels(ConservativeSystem::assemble(HermitianOperator::zero(2), HermitianOperator::zero(1),
                                                          Matrix::Zero(2, 1)));
  CHECK(zero.rank == 0);
}

TEST_CASE("channel eigen-relation and polar identity") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n1 = 2 + trial % 4, n2 = 1 + trial % 5;
    const auto s = ConservativeSystem::assemble(HermitianOperator::zero(n1), HermitianOperator::zero(n2),
                                                openext::testing::random_complex(rng, n1, n2));
    const auto c = channels(s);
    const Matrix g = s.gamma();
    const Matrix root = principal_sqrt_psd(HermitianOperator(Matrix(g.adjoint() * g))).matrix();
    for (Index q = 0; q < c.rank; ++q) {
      CHECK((g * g.adjoint() * c.g.col(q) - c.gammas(q) * c.g.col(q)).norm() <= 1e-10 * (1 + c.gammas(0)));
      CHECK((g.adjoint() * c.g.col(q) - std::sqrt(c.gammas(q)) * c.g_prime.col(q)).norm() <= 1e-9);
      CHECK((root * c.g_prime.col(q) - std::sqrt(c.gammas(q)) * c.g_prime.col(q)).norm() <= 1e-9);
    }
  }
}

TEST_CASE("degenerate channel strengths are reported") {
  Rng rng(32);
  const Matrix u = openext::testing::random_unitary(rng, 3);
  const Matrix v = openext::testing::random_unitary(rng, 3);
  const Matrix g = u * RealVector{{2.0, 2.0, 1.0}}.cast<Complex>().asDiagonal() * v.adjoint();
  const auto c = channels(ConservativeSystem::assemble(HermitianOperator::zero(3), HermitianOperator::zero(3), g));
  REQUIRE(c.degenerate_groups.size() == 1);
  CHECK(c.degenerate_groups[0] == std::vector<Index>{0, 1});
}

TEST_CASE("coupling_matrix") {
  const auto s = ex_a();
  const auto m = coupling_matrix(s, coordinates(1, 2), coordinates(2, 2));
  Eigen::MatrixXi expected(2, 2);
  expected << 1, 1, 0, 0;
  CHECK(m.ranks == expected);
  CHECK(m.zero_rows == std::vector<Index>{1});
  CHECK(m.zero_cols.empty());

  const auto zero = ConservativeSystem::assemble(HermitianOperator::zero(2), HermitianOperator::zero(2), Matrix::Zero(2, 2));
  CHECK(coupling_matrix(zero, coordinates(1, 2), coordinates(2, 2)).ranks.sum() == 0);
  CHECK_THROWS_AS(coupling_matrix(s, coordinates(2, 2), coordinates(2, 2)), ValidationError);
}

TEST_CASE("coupling_matrix of a planted block-diagonal coupling") {
  Rng rng(33);
  Matrix g = Matrix::Zero(5, 4);
  g.topLeftCorner(2, 2) = openext::testing::random_complex(rng, 2, 2);
  g.bottomRightCorner(3, 2) = openext::testing::random_complex(rng, 3, 1) * openext::testing::random_complex(rng, 1, 2);
  const auto s = ConservativeSystem::assemble(HermitianOperator::zero(5), HermitianOperator::zero(4), g);
  const BlockPartition p1(1, 5, {Subspace(Matrix(Matrix::Identity(5, 5).leftCols(2))),
                                 Subspace(Matrix(Matrix::Identity(5, 5).rightCols(3)))});
  const BlockPartition p2(2, 4, {Subspace(Matrix(Matrix::Identity(4, 4).leftCols(2))),
                                 Subspace(Matrix(Matrix::Identity(4, 4).rightCols(2)))});
  const auto m = coupling_matrix(s, p1, p2);
  Eigen::MatrixXi expected(2, 2);
  expected << 2, 0, 0, 1;
  CHECK(m.ranks == expected);
  CHECK(m.ranks.sum() == channels(s).rank);
}

TEST_CASE("s-invariance on EX-A") {
  const auto s = ex_a();
  const auto frozen = is_s_invariant(s, Subspace(s.embed_observable(unit(2, 1))));
  CHECK(frozen.verdict);
  CHECK(frozen.omega_commutator < 1e-14);
  const auto leaky = is_s_invariant(s, Subspace(s.embed_observable(unit(2, 0))));
  CHECK_FALSE(leaky.verdict);
  CHECK(leaky.omega_commutator > 0.5);
  CHECK(is_s_invariant(s, Subspace::full(4)).verdict);
}

TEST_CASE("canonical decomposition examples") {
  SUBCASE("diagonal coupling splits into two components") {
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 0.3;
    g(1, 1) = 0.7;
    const auto s = ConservativeSystem::assemble(HermitianOperator::diagonal(RealVector{{1.0, 2.0}}),
                                                HermitianOperator::diagonal(RealVector{{5.0, 6.0}}), g);
    const auto d = canonical_decomposition(s);
    REQUIRE(d.components.size() == 2);
    CHECK(d.coupled_count() == 2);
    CHECK(d.edges.empty());
    for (const auto& c : d.components) {
      CHECK(c.h1.dim() == 1);
      CHECK(c.h2.dim() == 1);
      CHECK(c.invariance.verdict);
    }
    // Strongest channel first: 0.7 couples e₂ to e₂′.
    CHECK(same_span(d.components[0].h1, Subspace(unit(2, 1))));
    CHECK(same_span(d.components[1].h1, Subspace(unit(2, 0))));
    CHECK(d.block_residual < 1e-12);
  }
  SUBCASE("EX-A core is one component") {
    const auto d = canonical_decomposition(reconstructible_core(ex_a()));
    CHECK(d.components.size() == 1);
    CHECK(d.coupled_count() == 1);
  }
  SUBCASE("EX-A adds its frozen direction as a decoupled component") {
    const auto d = canonical_decomposition(ex_a());
    REQUIRE(d.components.size() == 2);
    CHECK(d.coupled_count() == 1);
    CHECK(d.components[1].decoupled);
    CHECK(d.components[1].h1.dim() == 1);
    CHECK(d.block_residual < 1e-12);
  }
}

TEST_CASE("canonical component count is invariant under block unitaries") {
  Rng rng(34);
  for (int trial = 0; trial < 8; ++trial) {
    // Two planted components with different coupling strengths and spectra.
    const Matrix o1 = openext::testing::block_diag(
        openext::testing::planted_spectrum(rng, RealVector{{0.1, 1.1}}),
        openext::testing::planted_spectrum(rng, RealVector{{2.3, 3.4}}));
    const Matrix o2 = openext::testing::block_diag(
        openext::testing::planted_spectrum(rng, RealVector{{0.5, 1.7}}),
        openext::testing::planted_spectrum(rng, RealVector{{2.9, 4.2, 5.1}}));
    Matrix g = Matrix::Zero(4, 5);
    g.topLeftCorner(2, 2) = unit(2, 0) * unit(2, 0).adjoint();
    g.bottomRightCorner(2, 3) = 0.5 * unit(2, 1) * unit(3, 2).adjoint();
    const auto base = ConservativeSystem::assemble(HermitianOperator(o1), HermitianOperator(o2), g);
    const Matrix w1 = openext::testing::random_unitary(rng, 4);
    const Matrix w2 = openext::testing::random_unitary(rng, 5);
    const auto s = ConservativeSystem::assemble(HermitianOperator(Matrix(w1 * o1 * w1.adjoint())),
                                                HermitianOperator(Matrix(w2 * o2 * w2.adjoint())),
                                                Matrix(w1 * g * w2.adjoint()));
    const auto a = canonical_decomposition(base);
    const auto b = canonical_decomposition(s);
    CHECK(a.coupled_count() == 2);
    CHECK(b.coupled_count() == a.coupled_count());
    CHECK(b.components.size() == a.components.size());
    CHECK(b.block_residual <= 1e-9 * operator_norm(s.omega().matrix()));
  }
}

TEST_CASE("decoupling reports on EX-A") {
  const auto s = ex_a();
  SUBCASE("frozen direction") {
    const auto r = decoupling_report(s, Subspace(unit(2, 1)));
    CHECK(r.decoupled);
    CHECK(r.reciprocal);
    REQUIRE(r.splitting.has_value());
    CHECK(r.splitting->h1.dim() == 1);
    CHECK(r.splitting->h2.dim() == 0);
    CHECK(r.splitting->invariance.verdict);
  }
  SUBCASE("coupled direction") {
    const auto r = decoupling_report(s, Subspace(unit(2, 0)));
    CHECK(r.decoupled);
    CHECK(r.reciprocal);
    REQUIRE(r.splitting.has_value());
    CHECK(r.splitting->h2.dim() == 2);
  }
  SUBCASE("mixed direction") {
    Matrix v(2, 1);
    v << 1, 1;
    const auto r = decoupling_report(s, orthonormal_basis(v));
    CHECK_FALSE(r.decoupled);
    CHECK_FALSE(r.splitting.has_value());
  }
  SUBCASE("time grid") {
    const auto t = decoupling_time_grid(s);
    REQUIRE(t.size() == 25);
    CHECK(t.back() == doctest::Approx(2 * std::numbers::pi));
  }
}

TEST_CASE("mutual decoupling on random split systems") {
  Rng rng(35);
  for (int trial = 0; trial < 6; ++trial) {
    const Matrix o1 = openext::testing::block_diag(openext::testing::random_hermitian(rng, 2),
                                                   openext::testing::random_hermitian(rng, 2));
    const Matrix o2 = openext::testing::block_diag(openext::testing::random_hermitian(rng, 2),
                                                   openext::testing::random_hermitian(rng, 3));
    Matrix g = Matrix::Zero(4, 5);
    g.topLeftCorner(2, 2) = openext::testing::random_complex(rng, 2, 2);
    g.bottomRightCorner(2, 3) = openext::testing::random_complex(rng, 2, 3);
    const Matrix w1 = openext::testing::random_unitary(rng, 4);
    const auto s = ConservativeSystem::assemble(HermitianOperator(Matrix(w1 * o1 * w1.adjoint())), HermitianOperator(o2),
                                                Matrix(w1 * g));
    const auto r = decoupling_report(s, Subspace(Matrix(w1.leftCols(2))));
    CHECK(r.decoupled);
    CHECK(r.reciprocal);
    CHECK(r.reverse_omega_block <= 1e-9 * operator_norm(s.omega1().matrix()));
  }
}
