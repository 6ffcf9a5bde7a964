#ifndef GLASSTN_LATTICE_HPP
#define GLASSTN_LATTICE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "glasstn/errors.hpp"

namespace glasstn {

enum class LatticeKind { cylinder, diamond_cubic, dimerized_cubic, tree, custom };
enum class Boundary { open, periodic };

std::string to_string(LatticeKind kind);
std::optional<LatticeKind> lattice_kind_from_string(const std::string& name);

struct LatticeSpec {
  LatticeKind kind = LatticeKind::custom;
  std::vector<int> dims;
  std::vector<Boundary> boundary;  // empty: per-kind default
};

// Simple undirected graph; edges are (u < v), lexicographically sorted.
struct Graph {
  int num_vertices = 0;
  std::vector<std::pair<int, int>> edges;

  int num_edges() const { return static_cast<int>(edges.size()); }
  int edge_index(int u, int v) const;  // -1 when absent
  std::vector<std::vector<int>> adjacency() const;
  // Per vertex: (neighbor, edge id) pairs.
  std::vector<std::vector<std::pair<int, int>>> incidence() const;
  std::vector<int> degrees() const;
  int max_degree() const;
};

Graph make_graph(int num_vertices, std::vector<std::pair<int, int>> edges);

struct QubitLattice {
  LatticeSpec spec;
  Graph graph;  // vertices are qubits
  // Lattice coordinates per qubit: up to three axis values plus a basis/slot.
  std::vector<std::array<int, 4>> coords;
  std::vector<std::pair<int, int>> dimer_pairs;  // dimerized_cubic only
};

QubitLattice build_lattice(const LatticeSpec& spec);
QubitLattice make_custom_lattice(int num_qubits, std::vector<std::pair<int, int>> edges);

// Couplings are exact binary fractions a/128 with a an integer in [-128, 128].
struct DisorderInstance {
  QubitLattice lattice;
  std::vector<int> numerators;  // per edge
  std::uint64_t seed = 0;

  double coupling(int edge) const { return numerators[edge] / 128.0; }
};

DisorderInstance sample_couplings(const QubitLattice& lattice, std::uint64_t seed);

// Edge-list text format: '#'-comments, rows "i j a" with J_ij = a/128.
DisorderInstance load_edge_list(std::istream& in);
void save_edge_list(const DisorderInstance& instance, std::ostream& out);

// Tensor-network structure: one tensor per vertex, one or two qubits each.
struct BondTerm {
  int qubit_u = -1, qubit_w = -1;  // global qubit ids
  int slot_u = 0, slot_w = 0;      // position within each vertex
  double coupling = 0.0;
};

struct IntraTerm {
  int qubit_a = -1, qubit_b = -1;
  double coupling = 0.0;
};

struct TensorLattice {
  Graph graph;
  std::vector<std::vector<int>> vertex_qubits;
  std::vector<std::vector<BondTerm>> edge_terms;    // parallel to graph.edges
  std::vector<std::vector<IntraTerm>> vertex_terms; // on-vertex two-qubit terms
  int num_qubits = 0;
  std::vector<std::pair<int, int>> qubit_location;  // qubit -> (vertex, slot)

  // Column structure for ring/boundary-MPS contraction, when available:
  // columns[c] lists vertex ids in row order; column_ring marks a periodic
  // column arrangement.
  std::vector<std::vector<int>> columns;
  bool column_ring = false;

  int phys_dim(int vertex) const { return 1 << vertex_qubits[vertex].size(); }
};

// Identity grouping: one qubit per tensor.
TensorLattice as_tensor_lattice(const DisorderInstance& instance);

// Pair the dimers of a dimerized cubic instance into two-qubit tensors; the
// intra-dimer couplings become on-vertex terms.
TensorLattice group_dimers(const DisorderInstance& instance);

}  // namespace glasstn

#endif
