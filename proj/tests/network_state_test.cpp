#include "glasstn/network_state.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "glasstn/statevector.hpp"
#include "test_support.hpp"

using namespace glasstn;

namespace {

TensorLattice chain_lattice(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  DisorderInstance inst;
  inst.lattice = make_custom_lattice(n, edges);
  inst.numerators.assign(inst.lattice.graph.edges.size(), 64);
  return as_tensor_lattice(inst);
}

double x_expectation(const StateVector& v, int qubit) {
  const auto& amp = v.amplitudes();
  cplx s = 0.0;
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  for (std::uint64_t n = 0; n < amp.size(); ++n)
    s += std::conj(amp[n]) * amp[n ^ bit];
  return s.real();
}

}  // namespace

TEST(NetworkState, MinusProductHasMinusOneX) {
  TensorLattice lat = chain_lattice(4);
  NetworkState state = uniform_product_state(lat, minus_state());
  StateVector v = to_statevector(state);
  EXPECT_NEAR(v.norm(), 1.0, 1e-13);
  for (int q = 0; q < 4; ++q) EXPECT_NEAR(x_expectation(v, q), -1.0, 1e-12);
}

TEST(NetworkState, ZeroProductHasUnitZZ) {
  TensorLattice lat = chain_lattice(4);
  Eigen::Vector2cd zero;
  zero << 1.0, 0.0;
  NetworkState state = uniform_product_state(lat, zero);
  auto c = exact_z_correlators(to_statevector(state));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(c.pairs(i, j), 1.0, 1e-13);
}

TEST(NetworkState, MinusProductHasVanishingZZ) {
  TensorLattice lat = chain_lattice(4);
  NetworkState state = uniform_product_state(lat, minus_state());
  auto c = exact_z_correlators(to_statevector(state));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_NEAR(c.pairs(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(NetworkState, UnnormalizedAmplitudeRejected) {
  TensorLattice lat = chain_lattice(2);
  Eigen::Vector2cd bad;
  bad << 1.0, 0.5;
  EXPECT_THROW(uniform_product_state(lat, bad), InvalidInputError);
}

TEST(NetworkState, IdentityGateIsBitwiseNoop) {
  TensorLattice lat = chain_lattice(3);
  NetworkState state = uniform_product_state(lat, minus_state());
  std::vector<cplx> before = state.tensor(1).data();
  apply_one_site_gate(state, 1, Eigen::MatrixXcd::Identity(2, 2));
  const std::vector<cplx>& after = state.tensor(1).data();
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t k = 0; k < before.size(); ++k) {
    EXPECT_EQ(before[k].real(), after[k].real());
    EXPECT_EQ(before[k].imag(), after[k].imag());
  }
}

TEST(NetworkState, PauliXFlipsLocalZ) {
  TensorLattice lat = chain_lattice(3);
  Eigen::Vector2cd zero;
  zero << 1.0, 0.0;
  NetworkState state = uniform_product_state(lat, zero);
  Eigen::MatrixXcd x(2, 2);
  x << 0, 1, 1, 0;
  apply_one_site_gate(state, 1, x);
  auto c = exact_z_correlators(to_statevector(state));
  EXPECT_NEAR(c.singles[0], 1.0, 1e-13);
  EXPECT_NEAR(c.singles[1], -1.0, 1e-13);
  EXPECT_NEAR(c.singles[2], 1.0, 1e-13);
}

TEST(NetworkState, HalfRotationsComposeExactly) {
  TensorLattice lat = chain_lattice(2);
  NetworkState a = uniform_product_state(lat, minus_state());
  NetworkState b = uniform_product_state(lat, minus_state());
  const double theta = 0.731;
  auto rot = [](double t) {
    Eigen::MatrixXcd m(2, 2);
    m << std::cos(t / 2), cplx(0, -std::sin(t / 2)), cplx(0, -std::sin(t / 2)),
        std::cos(t / 2);
    return m;
  };
  apply_one_site_gate(a, 0, rot(theta / 2));
  apply_one_site_gate(a, 0, rot(theta / 2));
  apply_one_site_gate(b, 0, rot(theta));
  StateVector va = to_statevector(a), vb = to_statevector(b);
  for (std::size_t n = 0; n < va.amplitudes().size(); ++n)
    EXPECT_LT(std::abs(va.amplitudes()[n] - vb.amplitudes()[n]), 1e-12);
}

TEST(NetworkState, DimerVertexGates) {
  LatticeSpec spec{LatticeKind::dimerized_cubic, {2, 1, 2}, {}};
  DisorderInstance inst = sample_couplings(build_lattice(spec), 3);
  TensorLattice grouped = group_dimers(inst);
  NetworkState state = uniform_product_state(grouped, minus_state());
  EXPECT_EQ(state.num_qubits(), 8);
  EXPECT_EQ(state.num_vertices(), 4);

  Eigen::MatrixXcd x(2, 2);
  x << 0, 1, 1, 0;
  Eigen::Vector2cd zero;
  zero << 1.0, 0.0;
  NetworkState zstate = uniform_product_state(grouped, zero);
  apply_one_site_gate_on_qubit(zstate, 3, x);
  auto c = exact_z_correlators(to_statevector(zstate));
  for (int q = 0; q < 8; ++q)
    EXPECT_NEAR(c.singles[q], q == 3 ? -1.0 : 1.0, 1e-12);
}

TEST(NetworkState, CheckpointRoundTripsBitExactly) {
  TensorLattice lat = chain_lattice(3);
  NetworkState state = uniform_product_state(lat, minus_state());
  Eigen::MatrixXcd g(2, 2);
  g << std::cos(0.3), cplx(0, -std::sin(0.3)), cplx(0, -std::sin(0.3)), std::cos(0.3);
  apply_one_site_gate(state, 0, g);

  std::stringstream first, second;
  state.save(first);
  std::string blob = first.str();
  std::stringstream in(blob);
  NetworkState loaded = NetworkState::load(in, lat);
  loaded.save(second);
  EXPECT_EQ(blob, second.str());

  StateVector va = to_statevector(state), vb = to_statevector(loaded);
  for (std::size_t n = 0; n < va.amplitudes().size(); ++n)
    EXPECT_LT(std::abs(va.amplitudes()[n] - vb.amplitudes()[n]), 1e-14);
}

TEST(NetworkState, CheckpointRejectsWrongLattice) {
  TensorLattice lat = chain_lattice(3);
  NetworkState state = uniform_product_state(lat, minus_state());
  std::stringstream buf;
  state.save(buf);
  TensorLattice other = chain_lattice(4);
  EXPECT_THROW(NetworkState::load(buf, other), IoError);
}
