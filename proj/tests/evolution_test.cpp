#include "glasstn/evolution.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "test_support.hpp"

using namespace glasstn;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TensorLattice grid_lattice(int rows, int cols, std::uint64_t seed) {
  std::vector<std::pair<int, int>> edges;
  auto id = [&](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
    }
  QubitLattice lat = make_custom_lattice(rows * cols, edges);
  return as_tensor_lattice(sample_couplings(lat, seed));
}

TensorLattice tree_instance(int n, std::uint64_t seed) {
  QubitLattice lat = build_lattice({LatticeKind::tree, {n}, {}});
  return as_tensor_lattice(sample_couplings(lat, seed));
}

double eps_c(const CorrelatorData& a, const CorrelatorData& b) {
  double num = 0, den = 0;
  for (int i = 0; i < a.pairs.rows(); ++i)
    for (int j = 0; j < i; ++j) {
      num += (a.pairs(i, j) - b.pairs(i, j)) * (a.pairs(i, j) - b.pairs(i, j));
      den += b.pairs(i, j) * b.pairs(i, j);
    }
  return std::sqrt(num / den);
}

}  // namespace

TEST(Schedule, BuiltinEndpointsAndWarning) {
  Schedule s = Schedule::builtin();
  EXPECT_NEAR(s.gamma(0.0), 0.0, 1e-15);
  EXPECT_NEAR(s.gamma(1.0), kTwoPi, 1e-12);
  EXPECT_NEAR(s.jx(0.0), kTwoPi, 1e-12);
  EXPECT_NEAR(s.jx(1.0), 0.0, 1e-15);
  EXPECT_NEAR(s.gamma(0.25), kTwoPi * 0.25, 1e-12);
  EXPECT_FALSE(s.prep_warning());
}

TEST(Schedule, CsvRoundTripAndValidation) {
  std::stringstream csv("s,Gamma,J\n0,0.5,6.0\n0.5,1.0,3.0\n1,2.0,0.1\n");
  Schedule s = Schedule::from_csv(csv);
  EXPECT_NEAR(s.gamma(0.5), 1.0, 1e-12);
  EXPECT_NEAR(s.jx(0.25), 4.5, 1e-12);
  EXPECT_FALSE(s.prep_warning());

  std::stringstream bad_order("0,1,1\n0.5,1,1\n0.4,1,1\n1,1,1\n");
  EXPECT_THROW(Schedule::from_csv(bad_order), InvalidInputError);
  std::stringstream bad_span("0.1,1,1\n1,1,1\n");
  EXPECT_THROW(Schedule::from_csv(bad_span), InvalidInputError);

  std::stringstream warn("0,1.0,2.0\n1,1,0\n");
  EXPECT_TRUE(Schedule::from_csv(warn).prep_warning());
}

TEST(Schedule, CubicInterpolationHitsSamples) {
  std::vector<std::array<double, 3>> samples{
      {0.0, 0.0, 6.0}, {0.3, 1.0, 4.0}, {0.7, 3.0, 2.0}, {1.0, 6.0, 0.0}};
  Schedule s = Schedule::from_samples(samples, Schedule::Interp::cubic);
  for (const auto& p : samples) {
    EXPECT_NEAR(s.gamma(p[0]), p[1], 1e-12);
    EXPECT_NEAR(s.jx(p[0]), p[2], 1e-12);
  }
  // Smooth and finite in between.
  for (double x = 0.0; x <= 1.0; x += 0.01) EXPECT_TRUE(std::isfinite(s.gamma(x)));
}

TEST(TrotterLayer, ZeroTransverseFieldGivesIdentityOneSiteGates) {
  TensorLattice lat = tree_instance(4, 1);
  Schedule s = Schedule::builtin();  // jx(1) = 0
  auto layer = trotter_layer(lat, s, 1.0, 0.01);
  for (const auto& g : layer) {
    if (g.kind == Gate::Kind::vertex) {
      EXPECT_LT((g.matrix - Eigen::MatrixXcd::Identity(g.matrix.rows(), g.matrix.cols()))
                    .norm(),
                1e-14);
    }
  }
}

TEST(TrotterLayer, ZeroCouplingGivesIdentityTwoSiteGates) {
  TensorLattice lat = tree_instance(4, 1);
  Schedule s = Schedule::builtin();  // gamma(0) = 0
  auto layer = trotter_layer(lat, s, 0.0, 0.01);
  int edge_gates = 0;
  for (const auto& g : layer) {
    if (g.kind == Gate::Kind::edge) {
      ++edge_gates;
      EXPECT_LT((g.matrix - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-14);
    }
  }
  EXPECT_EQ(edge_gates, lat.graph.num_edges());
}

TEST(TrotterLayer, GatesAreUnitary) {
  TensorLattice lat = grid_lattice(2, 2, 5);
  Schedule s = Schedule::builtin();
  for (const auto& g : trotter_layer(lat, s, 0.37, 0.02)) {
    Eigen::MatrixXcd prod = g.matrix * g.matrix.adjoint();
    EXPECT_LT((prod - Eigen::MatrixXcd::Identity(prod.rows(), prod.cols())).norm(),
              1e-12);
  }
}

TEST(TrotterLayer, SecondOrderErrorScaling) {
  // One layer against the exact midpoint propagator on two qubits.
  QubitLattice qlat = make_custom_lattice(2, {{0, 1}});
  DisorderInstance inst;
  inst.lattice = qlat;
  inst.numerators = {96};  // J = 0.75
  TensorLattice lat = as_tensor_lattice(inst);
  Schedule sched = Schedule::builtin();
  const double s = 0.5;

  Eigen::MatrixXcd h = dense_hamiltonian(inst, sched.gamma(s), sched.jx(s));
  std::vector<double> errors;
  std::vector<double> dts{0.04, 0.02, 0.01};
  for (double dt : dts) {
    StateVector v(2);
    std::vector<cplx> amp{0.5, 0.5, 0.5, 0.5};
    v = StateVector::from_amplitudes(2, amp);
    apply_layer(v, trotter_layer(lat, sched, s, dt));
    Eigen::MatrixXcd u = hermitian_propagator(h, dt);
    Eigen::Map<Eigen::VectorXcd> amp_ref_init(amp.data(), 4);
    Eigen::VectorXcd expect = u * amp_ref_init;
    double err = 0.0;
    for (int n = 0; n < 4; ++n) err += std::norm(v.amplitudes()[n] - expect(n));
    errors.push_back(std::sqrt(err));
  }
  const double order1 = std::log2(errors[0] / errors[1]);
  const double order2 = std::log2(errors[1] / errors[2]);
  EXPECT_GE(order1, 2.9);
  EXPECT_GE(order2, 2.9);
}

TEST(Evolve, TransverseOnlyScheduleKeepsProductState) {
  TensorLattice lat = grid_lattice(2, 3, 7);
  Schedule gamma_free =
      Schedule::from_samples({{0.0, 0.0, kTwoPi}, {1.0, 0.0, kTwoPi}});
  NetworkState state = uniform_product_state(lat, minus_state());
  NormMessages messages(state);
  EvolutionParams params;
  params.t_a = 0.25;
  params.dt = 0.01;
  params.chi_bp = 8;
  params.chi = 8;
  evolve(state, messages, gamma_free, params);
  EXPECT_EQ(state.max_bond_dim(), 1);
  auto c = exact_z_correlators(to_statevector(state));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      EXPECT_NEAR(c.pairs(i, j) - c.singles[i] * c.singles[j], 0.0, 1e-10);
    }
}

TEST(Evolve, UnboundedChiMatchesOracleOnOpenGrid) {
  // chi_bp = 32 never bites on 8 qubits (every cut rank is <= 16), so the
  // evolution is truncation-free.
  TensorLattice lat = grid_lattice(2, 4, 11);
  Schedule sched = Schedule::builtin();
  EvolutionParams params;
  params.t_a = 7.0;
  params.dt = 0.01;
  params.chi_bp = 32;
  params.chi = 32;
  params.bp_tol = 1e-8;

  NetworkState state = uniform_product_state(lat, minus_state());
  NormMessages messages(state);
  EvolveStats stats = evolve(state, messages, sched, params);
  EXPECT_EQ(stats.steps, 700);

  StateVector tn = to_statevector(state);
  EXPECT_NEAR(tn.norm(), 1.0, 1e-8);  // no truncation: unitary end to end

  StateVector oracle = exact_evolve(lat, sched, params);
  double err = eps_c(exact_z_correlators(tn), exact_z_correlators(oracle));
  EXPECT_LT(err, 1e-3);
}

TEST(Evolve, HalvingDtQuartersTheError) {
  TensorLattice lat = tree_instance(5, 13);
  Schedule sched = Schedule::builtin();

  EvolutionParams fine;
  fine.t_a = 0.5;
  fine.dt = 0.0025;
  fine.chi_bp = 64;
  fine.chi = 64;
  StateVector reference = exact_evolve(lat, sched, fine);
  auto ref_corr = exact_z_correlators(reference);

  std::vector<double> errs;
  for (double dt : {0.04, 0.02}) {
    EvolutionParams params = fine;
    params.dt = dt;
    StateVector v = exact_evolve(lat, sched, params);
    errs.push_back(eps_c(exact_z_correlators(v), ref_corr));
  }
  EXPECT_GT(errs[0] / errs[1], 2.5);
  EXPECT_LT(errs[0] / errs[1], 6.0);
}

TEST(Prepare, TransverseFieldGroundStateIsExact) {
  TensorLattice lat = grid_lattice(2, 3, 17);
  Schedule sched = Schedule::builtin();  // gamma(0) = 0
  PrepParams params;
  params.chi_bp = 4;
  PrepResult prep = prepare_ground_state(lat, sched, params);
  Eigen::Matrix2cd sx;
  sx << 0, 1, 1, 0;
  auto x = bp_site_expectations(prep.state, prep.messages, sx);
  for (double v : x) EXPECT_NEAR(v, -1.0, 1e-9);
}

TEST(Prepare, SmallCouplingGroundStateMatchesExactDiagonalization) {
  QubitLattice qlat = build_lattice({LatticeKind::tree, {6}, {}});
  DisorderInstance inst = sample_couplings(qlat, 23);
  TensorLattice lat = as_tensor_lattice(inst);
  // gamma(0)/jx(0) = 0.01
  Schedule sched = Schedule::from_samples(
      {{0.0, 0.01 * kTwoPi, kTwoPi}, {1.0, kTwoPi, 0.0}});
  PrepParams params;
  params.chi_bp = 8;
  PrepResult prep = prepare_ground_state(lat, sched, params);

  StateVector v = to_statevector(prep.state);
  EXPECT_NEAR(v.norm(), 1.0, 1e-6);
  v.normalize();
  Eigen::MatrixXcd h = dense_hamiltonian(inst, sched.gamma(0), sched.jx(0));
  Eigen::Map<const Eigen::VectorXcd> amp(v.amplitudes().data(), 64);
  double energy = (amp.adjoint() * h * amp).real()(0, 0);
  EXPECT_NEAR(energy, ground_energy(inst, sched.gamma(0), sched.jx(0)), 1e-6);

  // Correlations in the prepared state are tiny.
  auto c = exact_z_correlators(v);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i != j) EXPECT_NEAR(c.pairs(i, j), 0.0, 1e-4);
}

TEST(ExactEvolve, FrozenHamiltonianConservesEnergy) {
  QubitLattice qlat = build_lattice({LatticeKind::tree, {6}, {}});
  DisorderInstance inst = sample_couplings(qlat, 29);
  TensorLattice lat = as_tensor_lattice(inst);
  const double g = 1.3, jx = 0.9;
  Schedule frozen = Schedule::from_samples({{0.0, g, jx}, {1.0, g, jx}});
  EvolutionParams params;
  params.t_a = 1.0;
  params.dt = 0.01;  // 100 exact steps

  Eigen::MatrixXcd h = dense_hamiltonian(inst, g, jx);
  StateVector v0 = dense_ground_state(inst, 0.7 * g, jx);  // not an eigenstate of h
  StateVector v = exact_evolve(lat, frozen, params, StepMode::exact_step, &v0);

  auto energy = [&](const StateVector& sv) {
    Eigen::Map<const Eigen::VectorXcd> amp(sv.amplitudes().data(), 64);
    return (amp.adjoint() * h * amp).real()(0, 0);
  };
  EXPECT_NEAR(energy(v), energy(v0), 1e-8);
}

TEST(Evolve, ProgressLogAndCheckpointCadence) {
  TensorLattice lat = grid_lattice(2, 2, 31);
  Schedule sched = Schedule::builtin();
  NetworkState state = uniform_product_state(lat, minus_state());
  NormMessages messages(state);
  std::ostringstream log;
  EvolutionParams params;
  params.t_a = 0.05;
  params.dt = 0.01;
  params.chi_bp = 4;
  params.chi = 4;
  params.progress = &log;
  EvolveStats stats = evolve(state, messages, sched, params);
  EXPECT_EQ(stats.steps, 5);
  EXPECT_NE(log.str().find("step=5"), std::string::npos);
  EXPECT_NE(log.str().find("max_chi="), std::string::npos);
}
