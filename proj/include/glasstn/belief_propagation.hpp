#ifndef GLASSTN_BELIEF_PROPAGATION_HPP
#define GLASSTN_BELIEF_PROPAGATION_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/lattice.hpp"
#include "glasstn/network_state.hpp"
#include "glasstn/tensor.hpp"

namespace glasstn {

// Closed tensor network whose vertices are groups of tensors that are only
// contracted lazily (a norm-network vertex holds the uncontracted bra/ket
// pair, so chi^(2z) objects are never materialized).
class BpNetwork {
 public:
  enum class Kind {
    general,    // no bra/ket pairing; no message projection
    hermitian,  // sandwich of a Hermitian operator; Hermitian projection
    positive,   // norm network; Hermitian + PSD projection
  };

  struct Edge {
    int u = 0, v = 0;                // u < v
    std::vector<Index> ket, bra;     // bra[i] pairs with ket[i]; bra may be empty
    std::vector<Index> all_legs() const;
  };

  BpNetwork(std::vector<std::vector<Tensor>> vertex_factors, Kind kind,
            const std::map<std::uint64_t, std::uint64_t>& bra_of_ket = {});

  Kind kind() const { return kind_; }
  int num_vertices() const { return graph_.num_vertices; }
  int num_edges() const { return graph_.num_edges(); }
  const Graph& graph() const { return graph_; }
  const Edge& edge(int e) const { return edges_[e]; }
  const std::vector<Tensor>& factors(int v) const { return factors_[v]; }
  const std::vector<std::vector<std::pair<int, int>>>& incidence() const {
    return incidence_;
  }

 private:
  std::vector<std::vector<Tensor>> factors_;
  Graph graph_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, int>>> incidence_;
  Kind kind_;
};

// Directed-edge message map with pair normalization M_e . M_reverse(e) = 1.
class MessageSet {
 public:
  MessageSet() = default;
  MessageSet(const BpNetwork& net, std::vector<Tensor> messages);

  static int slot(int edge, bool from_u) { return 2 * edge + (from_u ? 0 : 1); }
  const Tensor& from_to(int u, int v) const;
  const Tensor& at_slot(int s) const { return msgs_[s]; }
  Tensor& at_slot(int s) { return msgs_[s]; }
  int num_edges() const { return static_cast<int>(msgs_.size() / 2); }

  double staleness() const { return staleness_; }
  void set_staleness(double s) { staleness_ = s; }
  std::int64_t iteration_count() const { return iteration_count_; }
  void bump_iterations(int n) { iteration_count_ += n; }

  // Replace the two messages of one edge (bond updates during evolution).
  void replace_edge(int edge, Tensor from_u, Tensor from_v);

 private:
  std::vector<Tensor> msgs_;                 // 2 per edge
  std::map<std::pair<int, int>, int> slot_;  // (from, to) -> slot
  double staleness_ = std::numeric_limits<double>::infinity();
  std::int64_t iteration_count_ = 0;
};

struct BpOptions {
  double tol = 1e-10;
  int max_sweeps = 500;
  double damping = 0.0;  // new = damping * old + (1 - damping) * update
  enum class Schedule { parallel, sequential } schedule = Schedule::parallel;
};

struct BpReport {
  int sweeps = 0;
  bool converged = false;
  std::vector<double> residuals;  // max message distance per sweep
};

MessageSet init_messages(const BpNetwork& net);

// Iterate the message update rule until the max Frobenius distance between
// consecutive normalized messages drops below tol. Throws NonConvergenceError
// (carrying the residual trace) when max_sweeps is exhausted.
BpReport bp_iterate(const BpNetwork& net, MessageSet& messages,
                    const BpOptions& options = {});

// Vertex-product over incoming messages divided by the edge-pair products;
// exact on trees.
cplx bp_contract(const BpNetwork& net, const MessageSet& messages);

// Per-vertex numerator factors of bp_contract (the n_v scalars).
std::vector<cplx> bp_vertex_scalars(const BpNetwork& net, const MessageSet& messages);

// The two directed messages of an edge: (M_{u->v}, M_{v->u}); together they
// form the rank-1 bond environment used by the simple update.
std::pair<Tensor, Tensor> edge_environment(const MessageSet& messages, int edge);

void write_convergence_csv(const BpReport& report, std::ostream& out);

// --- State-bound helpers -----------------------------------------------------

// Operator insertions for sandwich networks, one 2x2 matrix per qubit.
using QubitOperators = std::map<int, Eigen::Matrix2cd>;

// <psi|psi> as a grouped closed network (Kind::positive).
BpNetwork norm_network(const NetworkState& state);
// <psi|O|psi> with O a product of per-qubit Hermitian operators
// (Kind::hermitian; vertices with insertions group bra, op and ket).
BpNetwork sandwich_network(const NetworkState& state, const QubitOperators& ops);

// Fresh bra bonds, one per lattice edge.
std::vector<Index> make_bra_bonds(const NetworkState& state);
// Sandwich over caller-supplied bra bonds so message sets can be shared or
// warm-started across networks of the same state.
BpNetwork sandwich_network_with_bra(const NetworkState& state, const QubitOperators& ops,
                                    const std::vector<Index>& bra);

// Message cache bound to a state's norm network, with the bra legs kept
// stable across gate applications.
class NormMessages {
 public:
  explicit NormMessages(const NetworkState& state);

  BpNetwork network_view(const NetworkState& state) const;
  BpReport converge(const NetworkState& state, const BpOptions& options = {});

  double staleness() const { return messages_.staleness(); }
  const MessageSet& messages() const { return messages_; }
  const Index& bra_index(int edge) const { return bra_[edge]; }
  const std::vector<Index>& bra_indices() const { return bra_; }
  const Tensor& message(int from, int to) const { return messages_.from_to(from, to); }

  // Install diag(lambda) messages on an updated bond (lambda descending).
  void refresh_edge(const NetworkState& state, int edge,
                    const std::vector<double>& lambda);

 private:
  std::vector<Index> bra_;
  MessageSet messages_;
  Graph graph_;
};

// Rescale every vertex tensor so each BP vertex scalar is 1 (and with
// converged messages, <psi|psi> = 1). Messages stay valid.
void normalize_bp(NetworkState& state, const NormMessages& messages);

}  // namespace glasstn

#endif
