#include "glasstn/statevector.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>

using namespace glasstn;

namespace {

StateVector minus_product(int l) {
  std::vector<cplx> amp(std::size_t{1} << l);
  double scale = std::pow(2.0, -0.5 * l);
  for (std::size_t n = 0; n < amp.size(); ++n)
    amp[n] = ((std::popcount(n) % 2) ? -scale : scale);
  return StateVector::from_amplitudes(l, std::move(amp));
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  return x;
}

}  // namespace

TEST(StateVector, AllZeroStateCorrelators) {
  StateVector v(4);
  auto c = exact_z_correlators(v);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(c.singles[i], 1.0, 1e-14);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(c.pairs(i, j), 1.0, 1e-14);
  }
}

TEST(StateVector, MinusProductCorrelatorsVanish) {
  StateVector v = minus_product(5);
  auto c = exact_z_correlators(v);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(c.singles[i], 0.0, 1e-12);
    for (int j = 0; j < 5; ++j)
      EXPECT_NEAR(c.pairs(i, j), i == j ? 1.0 : 0.0, 1e-12);
  }
}

TEST(StateVector, GhzCorrelators) {
  int l = 4;
  std::vector<cplx> amp(16, 0.0);
  amp[0] = std::sqrt(0.5);
  amp[15] = std::sqrt(0.5);
  auto v = StateVector::from_amplitudes(l, std::move(amp));
  auto c = exact_z_correlators(v);
  for (int i = 0; i < l; ++i) {
    EXPECT_NEAR(c.singles[i], 0.0, 1e-14);
    for (int j = 0; j < l; ++j) EXPECT_NEAR(c.pairs(i, j), 1.0, 1e-14);
  }
}

TEST(StateVector, PauliXFlipsZ) {
  StateVector v(3);
  std::vector<int> q{1};
  v.apply_gate(q, pauli_x());
  auto c = exact_z_correlators(v);
  EXPECT_NEAR(c.singles[0], 1.0, 1e-14);
  EXPECT_NEAR(c.singles[1], -1.0, 1e-14);
  EXPECT_NEAR(c.singles[2], 1.0, 1e-14);
}

TEST(StateVector, DenseAndDiagonalGatesAgree) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateVector a(4), b(4);
  std::vector<cplx> random_amp(16);
  double norm2 = 0.0;
  for (auto& x : random_amp) {
    x = cplx(u(rng), u(rng));
    norm2 += std::norm(x);
  }
  for (auto& x : random_amp) x /= std::sqrt(norm2);
  a = StateVector::from_amplitudes(4, random_amp);
  b = StateVector::from_amplitudes(4, random_amp);

  std::vector<cplx> d{cplx(std::polar(1.0, 0.3)), cplx(std::polar(1.0, -0.3)),
                      cplx(std::polar(1.0, -0.3)), cplx(std::polar(1.0, 0.3))};
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) m(i, i) = d[i];
  std::vector<int> qs{2, 0};
  a.apply_gate(qs, m);
  b.apply_diagonal(qs, d);
  for (std::size_t n = 0; n < 16; ++n)
    EXPECT_LT(std::abs(a.amplitudes()[n] - b.amplitudes()[n]), 1e-14);
}

TEST(StateVector, DenseHamiltonianMatchesKronOracle) {
  QubitLattice lat = make_custom_lattice(2, {{0, 1}});
  DisorderInstance inst;
  inst.lattice = lat;
  inst.numerators = {64};  // J = 0.5
  double gamma = 0.7, jx = 1.3;
  Eigen::MatrixXcd h = dense_hamiltonian(inst, gamma, jx);

  Eigen::Matrix2cd z, x, id;
  z << 1, 0, 0, -1;
  x << 0, 1, 1, 0;
  id.setIdentity();
  // Qubit 0 is bit 0, hence the fast kron factor.
  Eigen::Matrix4cd oracle =
      gamma * 0.5 * Eigen::Matrix4cd(Eigen::kroneckerProduct(z, z)) +
      jx * Eigen::Matrix4cd(Eigen::kroneckerProduct(id, x)) +
      jx * Eigen::Matrix4cd(Eigen::kroneckerProduct(x, id));
  EXPECT_LT((h - oracle).norm(), 1e-12);
}

TEST(StateVector, GroundStateOfTransverseFieldPart) {
  // gamma = 0: H = jx * sum sx with jx > 0; ground state is |-> everywhere.
  QubitLattice lat = make_custom_lattice(3, {{0, 1}, {1, 2}});
  DisorderInstance inst;
  inst.lattice = lat;
  inst.numerators = {10, -30};
  StateVector g = dense_ground_state(inst, 0.0, 2.0);
  EXPECT_NEAR(ground_energy(inst, 0.0, 2.0), -6.0, 1e-10);
  StateVector target = minus_product(3);
  EXPECT_NEAR(std::abs(g.overlap(target)), 1.0, 1e-10);
}

TEST(StateVector, PropagatorIsUnitaryAndCorrect) {
  QubitLattice lat = make_custom_lattice(2, {{0, 1}});
  DisorderInstance inst;
  inst.lattice = lat;
  inst.numerators = {128};
  Eigen::MatrixXcd h = dense_hamiltonian(inst, 1.1, 0.4);
  Eigen::MatrixXcd u = hermitian_propagator(h, 0.37);
  EXPECT_LT((u * u.adjoint() - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-12);
  // Series check at small t.
  double t = 1e-4;
  Eigen::MatrixXcd us = hermitian_propagator(h, t);
  Eigen::MatrixXcd series = Eigen::MatrixXcd::Identity(4, 4) -
                            cplx(0, 1) * t * h - 0.5 * t * t * h * h;
  EXPECT_LT((us - series).norm(), 1e-10);
}

TEST(StateVector, SizeCapAndGateValidation) {
  EXPECT_THROW(StateVector(27), SizeCapError);
  StateVector v(2);
  std::vector<int> bad{0, 0};
  EXPECT_THROW(v.apply_gate(bad, Eigen::MatrixXcd::Identity(4, 4)), InvalidInputError);
  std::vector<int> q{0};
  EXPECT_THROW(v.apply_gate(q, Eigen::MatrixXcd::Identity(4, 4)), InvalidInputError);
}
