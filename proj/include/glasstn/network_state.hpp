#ifndef GLASSTN_NETWORK_STATE_HPP
#define GLASSTN_NETWORK_STATE_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/lattice.hpp"
#include "glasstn/statevector.hpp"
#include "glasstn/tensor.hpp"

namespace glasstn {

// Wavefunction as a graph tensor network mirroring the lattice: one tensor
// per (possibly dimer-grouped) vertex, one virtual bond per lattice edge.
// Tensor legs are ordered [physical..., bonds by edge id].
class NetworkState {
 public:
  explicit NetworkState(TensorLattice lattice);

  // Assemble from existing legs and tensors (lattice surgery, tests).
  static NetworkState adopt(TensorLattice lattice, std::vector<std::vector<Index>> phys,
                            std::vector<Index> bonds, std::vector<Tensor> tensors);

  const TensorLattice& lattice() const { return lattice_; }
  int num_vertices() const { return lattice_.graph.num_vertices; }
  int num_edges() const { return lattice_.graph.num_edges(); }
  int num_qubits() const { return lattice_.num_qubits; }

  const Tensor& tensor(int v) const { return tensors_[v]; }
  void set_tensor(int v, Tensor t);

  const Index& phys_index(int v, int slot) const { return phys_[v][slot]; }
  const Index& phys_index_of_qubit(int q) const;
  const Index& bond_index(int e) const { return bonds_[e]; }
  int bond_dim(int e) const { return bonds_[e].dim(); }
  int max_bond_dim() const;

  // Swap in a new bond on edge e; both endpoint tensors must already carry it.
  void set_bond(int e, Index bond, Tensor tu, Tensor tv);

  bool vidal() const { return vidal_; }
  const std::vector<double>& bond_weights(int e) const;
  void set_bond_weights(std::vector<std::vector<double>> weights);  // enables vidal
  void clear_bond_weights();

  std::uint64_t graph_hash() const;
  void save(std::ostream& out) const;
  static NetworkState load(std::istream& in, TensorLattice lattice);

 private:
  TensorLattice lattice_;
  std::vector<Tensor> tensors_;
  std::vector<std::vector<Index>> phys_;
  std::vector<Index> bonds_;
  std::vector<std::vector<double>> weights_;
  bool vidal_ = false;
};

// All virtual bonds have extent 1 and <psi|psi> = 1 exactly. One normalized
// 2-vector per qubit; errors beyond 1e-12 of unit norm are rejected.
NetworkState product_state(const TensorLattice& lattice,
                           const std::vector<Eigen::Vector2cd>& qubit_amplitudes);
NetworkState uniform_product_state(const TensorLattice& lattice,
                                   const Eigen::Vector2cd& amplitude);
Eigen::Vector2cd minus_state();  // (|0> - |1>)/sqrt(2)
Eigen::Vector2cd plus_state();

// Gate over the full physical space of one vertex (2x2, or 4x4 for dimers).
void apply_one_site_gate(NetworkState& state, int vertex, const Eigen::MatrixXcd& gate);
// Same gate matrix convention, addressed by qubit (slot resolved internally);
// for dimer vertices the 2x2 gate is promoted to act on the addressed slot.
void apply_one_site_gate_on_qubit(NetworkState& state, int qubit,
                                  const Eigen::MatrixXcd& gate);

// Exact dense amplitudes of the network, qubit q on bit q. Contraction
// cost is guarded by `budget` scalar multiplications.
StateVector to_statevector(const NetworkState& state, double budget = 5e9);

}  // namespace glasstn

#endif
