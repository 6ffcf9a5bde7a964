#ifndef GLASSTN_LOOP_CORRECTIONS_HPP
#define GLASSTN_LOOP_CORRECTIONS_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "glasstn/belief_propagation.hpp"

namespace glasstn {

// Simple cycles (edge-id lists) of length <= l_max, each exactly once up to
// rotation and reflection.
struct CycleBasis {
  int l_max = 0;
  std::vector<std::vector<int>> cycles;  // sorted edge ids per cycle
};

CycleBasis enumerate_simple_cycles(const Graph& graph, int l_max);

// Edge subset receiving antiprojectors; every touched vertex has at least two
// incident subset edges (other placements vanish at the BP fixed point).
struct LoopConfiguration {
  std::vector<int> edges;  // sorted edge ids
};

// All candidate subsets with |S| <= l_max: connected min-degree-2 clusters
// grown from the cycle basis, composed over vertex-disjoint combinations.
// Includes the empty configuration.
std::vector<LoopConfiguration> enumerate_configurations(const CycleBasis& basis,
                                                        const Graph& graph, int l_max);

// Frozen (network, messages) evaluator with per-vertex caches shared across
// configurations.
class LoopEvaluator {
 public:
  LoopEvaluator(const BpNetwork& net, const MessageSet& messages);

  cplx evaluate(std::span<const int> s_edges);  // W_S
  cplx w_empty();

  // Sum of W_S over all configurations with |S| <= l_max, in deterministic
  // order (size, then lexicographic edge list). Optional ledger rows:
  // "size,edges,abs_w".
  cplx corrected_sum(int l_max, std::ostream* ledger = nullptr);

 private:
  Tensor dressed_vertex(int v, const std::vector<int>& s_local);
  const Tensor& antiprojector(int e);

  const BpNetwork& net_;
  const MessageSet& messages_;
  std::vector<cplx> vertex_scalars_;
  std::vector<cplx> edge_norms_;  // M_e . M_reverse(e)
  cplx base_scale_ = 1.0;         // product of all vertex scalars
  std::vector<std::vector<Index>> uside_ket_, uside_bra_;  // stable relabels
  std::map<std::pair<int, std::vector<int>>, Tensor> dressed_cache_;
  std::map<int, Tensor> anti_cache_;
  std::optional<std::vector<LoopConfiguration>> configs_;
  int configs_l_max_ = -1;
};

cplx evaluate_configuration(const BpNetwork& net, const MessageSet& messages,
                            std::span<const int> s_edges);

cplx loop_corrected_contract(const BpNetwork& net, const MessageSet& messages,
                             int l_max, std::ostream* ledger = nullptr);

struct LoopExpectationOptions {
  double bp_tol = 1e-10;
  int max_sweeps = 1000;
  // Warm-start numerator/denominator BP from these (norm-network) messages.
  const NormMessages* warm_start = nullptr;
};

// Eq-style ratio <psi|prod ops|psi> / <psi|psi>, each side loop-corrected on
// its own converged message set.
double loop_corrected_expectation(const NetworkState& state, const QubitOperators& ops,
                                  int l_max, const LoopExpectationOptions& options = {});

// The denominator half, reusable across many numerators for one state.
struct LoopNormContext {
  cplx value = 1.0;       // loop-corrected <psi|psi>
  std::vector<Index> bra; // bra bonds shared with the numerator networks
};

LoopNormContext loop_norm_context(const NetworkState& state, int l_max,
                                  const LoopExpectationOptions& options = {});
double loop_corrected_expectation_with(const NetworkState& state,
                                       const QubitOperators& ops, int l_max,
                                       const LoopNormContext& ctx,
                                       const LoopExpectationOptions& options = {});

}  // namespace glasstn

#endif
