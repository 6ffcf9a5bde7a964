#ifndef GLASSTN_STATEVECTOR_HPP
#define GLASSTN_STATEVECTOR_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/lattice.hpp"
#include "glasstn/tensor.hpp"

namespace glasstn {

// Dense 2^L ground-truth engine. Qubit q maps to bit q of the amplitude
// index; bit value 0 is the sigma^z = +1 state.
class StateVector {
 public:
  static constexpr int kMaxQubits = 26;

  explicit StateVector(int num_qubits);  // |0...0>
  static StateVector from_amplitudes(int num_qubits, std::vector<cplx> amplitudes);

  int num_qubits() const { return num_qubits_; }
  const std::vector<cplx>& amplitudes() const { return amp_; }
  std::vector<cplx>& amplitudes() { return amp_; }

  // Dense k-qubit gate; qubits[0] indexes the most significant bit of the
  // gate basis (kron order).
  void apply_gate(std::span<const int> qubits, const Eigen::MatrixXcd& u);
  void apply_diagonal(std::span<const int> qubits, std::span<const cplx> diag);

  double norm() const;
  void normalize();
  cplx overlap(const StateVector& other) const;  // <this|other>

 private:
  int num_qubits_ = 0;
  std::vector<cplx> amp_;
};

struct CorrelatorData {
  std::vector<double> singles;  // <sigma^z_i>
  Eigen::MatrixXd pairs;        // <sigma^z_i sigma^z_j>, diagonal 1
};

CorrelatorData exact_z_correlators(const StateVector& v);

// H = gamma * sum_e J_e sz sz + jx * sum_i sx, dense; capped at 14 qubits.
Eigen::MatrixXcd dense_hamiltonian(const DisorderInstance& instance, double gamma,
                                   double jx);
StateVector dense_ground_state(const DisorderInstance& instance, double gamma, double jx);
double ground_energy(const DisorderInstance& instance, double gamma, double jx);

// exp(-i H t) for Hermitian H via eigendecomposition.
Eigen::MatrixXcd hermitian_propagator(const Eigen::MatrixXcd& h, double t);

}  // namespace glasstn

#endif
