#ifndef GLASSTN_EVOLUTION_HPP
#define GLASSTN_EVOLUTION_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/belief_propagation.hpp"
#include "glasstn/gauge.hpp"
#include "glasstn/lattice.hpp"
#include "glasstn/network_state.hpp"
#include "glasstn/statevector.hpp"

namespace glasstn {

// Annealing schedule: H(s) = gamma(s) sum J_ij sz sz + jx(s) sum sx, with
// energies in angular frequency per nanosecond (gamma * dt is an angle).
class Schedule {
 public:
  enum class Interp { linear, cubic };

  static Schedule builtin();  // gamma = 2*pi*s, jx = 2*pi*(1 - s)
  static Schedule from_samples(std::vector<std::array<double, 3>> samples,
                               Interp interp = Interp::linear);
  static Schedule from_csv(std::istream& in, Interp interp = Interp::linear);

  double gamma(double s) const;
  double jx(double s) const;
  // True when jx(0) < 10 * gamma(0): imaginary-time preparation may be poor.
  bool prep_warning() const;
  const std::vector<std::array<double, 3>>& samples() const { return samples_; }

 private:
  void validate_and_build();
  double eval(double s, int column) const;

  std::vector<std::array<double, 3>> samples_;  // (s, gamma, jx), s in [0, 1]
  Interp interp_ = Interp::linear;
  std::vector<std::array<double, 2>> second_derivs_;  // cubic spline moments
};

struct EvolutionParams {
  double t_a = 1.0;   // ns
  double dt = 0.01;   // ns
  int chi_bp = 16;    // max bond dimension during evolution
  int chi = 16;       // final bond dimension for measurement
  double bp_tol = 1e-6;
  int max_sweeps = 500;
  double cutoff = 1e-14;
  int checkpoint_every = 0;  // steps; 0 disables
  std::string checkpoint_path;
  std::ostream* progress = nullptr;
};

struct Gate {
  enum class Kind { vertex, edge } kind = Kind::vertex;
  int target = 0;           // vertex or edge id in the tensor lattice
  std::vector<int> qubits;  // global qubit ids, slot-major
  Eigen::MatrixXcd matrix;  // over the joint physical space
  bool diagonal = false;
  std::vector<cplx> diag;
};

// Symmetric second-order layer: half-step one-site x rotations, full-step
// two-site (and on-vertex) zz gates in deterministic order, mirrored
// one-site rotations. All gates unitary for real dt.
std::vector<Gate> trotter_layer(const TensorLattice& lattice, const Schedule& schedule,
                                double s, double dt);
// exp(-dtau H(0)) in the same splitting; gates are real and non-unitary.
std::vector<Gate> imaginary_layer(const TensorLattice& lattice, double gamma0,
                                  double jx0, double dtau);

struct EvolveStats {
  int steps = 0;
  double cumulative_truncation = 0.0;
  int max_bond_dim = 1;
  int bp_sweeps = 0;
};

// BP-cached Trotter evolution at chi_bp; the state is evolved in place and
// left un-truncated. On BP non-convergence the last good state is written to
// params.checkpoint_path (when set) before the error propagates.
EvolveStats evolve(NetworkState& state, NormMessages& messages,
                   const Schedule& schedule, const EvolutionParams& params);

struct PrepParams {
  double dtau_scale = 0.05;  // dtau = dtau_scale / max(|jx(0)|, |gamma(0)|)
  double tol = 1e-8;         // per-step single-site observable change
  int max_steps = 4000;
  int chi_bp = 8;
  double bp_tol = 1e-8;
  int max_sweeps = 500;
};

struct PrepResult {
  NetworkState state;
  NormMessages messages;
  int steps = 0;
};

// Imaginary-time ground-state preparation for H(0), started from the product
// ground state of the transverse-field part and BP-normalized on return.
PrepResult prepare_ground_state(const TensorLattice& lattice, const Schedule& schedule,
                                const PrepParams& params = {});

// Per-qubit <op> from converged norm messages.
std::vector<double> bp_site_expectations(const NetworkState& state,
                                         const NormMessages& messages,
                                         const Eigen::Matrix2cd& op);

enum class StepMode { trotter, exact_step };

// Dense reference evolution applying the same layers (or the exact midpoint
// propagator) to a statevector. Default start: ground state of H(0).
StateVector exact_evolve(const TensorLattice& lattice, const Schedule& schedule,
                         const EvolutionParams& params,
                         StepMode mode = StepMode::trotter,
                         const StateVector* initial = nullptr);

void apply_layer(StateVector& v, const std::vector<Gate>& layer);

}  // namespace glasstn

#endif
