#include "glasstn/loop_corrections.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <set>

#include "glasstn/contraction.hpp"

namespace glasstn {

CycleBasis enumerate_simple_cycles(const Graph& graph, int l_max) {
  CycleBasis basis;
  basis.l_max = l_max;
  if (l_max < 3) return basis;
  auto inc = graph.incidence();

  std::vector<int> path_vertices;
  std::vector<int> path_edges;
  std::vector<char> on_path(graph.num_vertices, 0);

  // Each cycle is rooted at its smallest vertex (rotation) and oriented so
  // the second vertex is smaller than the last (reflection).
  auto dfs = [&](auto&& self, int start, int v) -> void {
    for (const auto& [nbr, e] : inc[v]) {
      if (nbr == start && path_edges.size() + 1 >= 3) {
        if (static_cast<int>(path_edges.size()) + 1 <= l_max &&
            path_vertices[1] < path_vertices.back()) {
          std::vector<int> cycle = path_edges;
          cycle.push_back(e);
          std::sort(cycle.begin(), cycle.end());
          basis.cycles.push_back(std::move(cycle));
        }
        continue;
      }
      if (nbr <= start || on_path[nbr]) continue;
      if (static_cast<int>(path_edges.size()) + 1 >= l_max) continue;
      path_vertices.push_back(nbr);
      path_edges.push_back(e);
      on_path[nbr] = 1;
      self(self, start, nbr);
      on_path[nbr] = 0;
      path_edges.pop_back();
      path_vertices.pop_back();
    }
  };

  for (int start = 0; start < graph.num_vertices; ++start) {
    path_vertices = {start};
    path_edges.clear();
    on_path[start] = 1;
    dfs(dfs, start, start);
    on_path[start] = 0;
  }
  std::sort(basis.cycles.begin(), basis.cycles.end());
  return basis;
}

namespace {

std::set<int> edge_vertices(const Graph& graph, const std::vector<int>& edges) {
  std::set<int> vs;
  for (int e : edges) {
    vs.insert(graph.edges[e].first);
    vs.insert(graph.edges[e].second);
  }
  return vs;
}

bool min_degree_two(const Graph& graph, const std::vector<int>& edges) {
  std::map<int, int> deg;
  for (int e : edges) {
    deg[graph.edges[e].first] += 1;
    deg[graph.edges[e].second] += 1;
  }
  for (const auto& [v, d] : deg)
    if (d < 2) return false;
  return true;
}

}  // namespace

std::vector<LoopConfiguration> enumerate_configurations(const CycleBasis& basis,
                                                        const Graph& graph, int l_max) {
  // Connected clusters: grow every basis cycle by adjacent edges, keep the
  // min-degree-2 ones. Any connected min-degree-2 subset of <= l_max edges
  // contains a short cycle, so this sweep is exhaustive.
  std::set<std::vector<int>> seen;
  std::deque<std::vector<int>> frontier;
  for (const auto& c : basis.cycles) {
    if (static_cast<int>(c.size()) <= l_max && seen.insert(c).second)
      frontier.push_back(c);
  }
  auto inc = graph.incidence();
  std::vector<std::vector<int>> clusters;
  while (!frontier.empty()) {
    std::vector<int> cur = std::move(frontier.front());
    frontier.pop_front();
    if (min_degree_two(graph, cur)) clusters.push_back(cur);
    if (static_cast<int>(cur.size()) >= l_max) continue;
    std::set<int> grow;
    for (int v : edge_vertices(graph, cur))
      for (const auto& [nbr, e] : inc[v]) grow.insert(e);
    for (int e : grow) {
      if (std::binary_search(cur.begin(), cur.end(), e)) continue;
      std::vector<int> next = cur;
      next.insert(std::lower_bound(next.begin(), next.end(), e), e);
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  std::sort(clusters.begin(), clusters.end());
  clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());

  std::vector<std::set<int>> cluster_vertices;
  cluster_vertices.reserve(clusters.size());
  for (const auto& c : clusters) cluster_vertices.push_back(edge_vertices(graph, c));

  // Compose vertex-disjoint clusters; each subset decomposes uniquely into
  // its connected components, so every configuration appears exactly once.
  std::vector<LoopConfiguration> out;
  out.push_back({});  // the empty configuration
  std::vector<int> chosen_edges;
  std::set<int> chosen_vertices;
  auto compose = [&](auto&& self, std::size_t first) -> void {
    for (std::size_t k = first; k < clusters.size(); ++k) {
      if (static_cast<int>(chosen_edges.size() + clusters[k].size()) > l_max) continue;
      bool disjoint = true;
      for (int v : cluster_vertices[k])
        if (chosen_vertices.count(v)) { disjoint = false; break; }
      if (!disjoint) continue;
      const std::size_t edge_mark = chosen_edges.size();
      chosen_edges.insert(chosen_edges.end(), clusters[k].begin(), clusters[k].end());
      for (int v : cluster_vertices[k]) chosen_vertices.insert(v);
      std::vector<int> sorted_edges = chosen_edges;
      std::sort(sorted_edges.begin(), sorted_edges.end());
      out.push_back({std::move(sorted_edges)});
      self(self, k + 1);
      chosen_edges.resize(edge_mark);
      for (int v : cluster_vertices[k]) chosen_vertices.erase(v);
    }
  };
  compose(compose, 0);

  std::sort(out.begin(), out.end(), [](const LoopConfiguration& a,
                                       const LoopConfiguration& b) {
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.edges < b.edges;
  });
  return out;
}

LoopEvaluator::LoopEvaluator(const BpNetwork& net, const MessageSet& messages)
    : net_(net), messages_(messages) {
  vertex_scalars_ = bp_vertex_scalars(net_, messages_);
  base_scale_ = 1.0;
  for (cplx n : vertex_scalars_) base_scale_ *= n;
  edge_norms_.resize(net_.num_edges());
  uside_ket_.resize(net_.num_edges());
  uside_bra_.resize(net_.num_edges());
  for (int e = 0; e < net_.num_edges(); ++e) {
    edge_norms_[e] = contract(messages_.at_slot(MessageSet::slot(e, true)),
                              messages_.at_slot(MessageSet::slot(e, false)))
                         .scalar();
    if (std::abs(edge_norms_[e]) < 1e-300)
      throw DegenerateMessageError("degenerate projector on edge " + std::to_string(e));
    for (const auto& k : net_.edge(e).ket) uside_ket_[e].push_back(k.sibling());
    for (const auto& b : net_.edge(e).bra) uside_bra_[e].push_back(b.sibling());
  }
}

Tensor LoopEvaluator::dressed_vertex(int v, const std::vector<int>& s_local) {
  auto key = std::make_pair(v, s_local);
  auto it = dressed_cache_.find(key);
  if (it != dressed_cache_.end()) return it->second;

  std::vector<Tensor> operands = net_.factors(v);
  for (const auto& [nbr, e] : net_.incidence()[v]) {
    if (std::binary_search(s_local.begin(), s_local.end(), e)) continue;
    operands.push_back(messages_.from_to(nbr, v));
  }
  Tensor d = contract_network(std::move(operands));
  // The u side of each antiprojector edge takes relabeled leg copies so both
  // ports of the inserted operator stay distinct.
  for (int e : s_local) {
    if (net_.edge(e).u != v) continue;
    const auto& edge = net_.edge(e);
    for (std::size_t i = 0; i < edge.ket.size(); ++i)
      d = d.replaced(edge.ket[i], uside_ket_[e][i]);
    for (std::size_t i = 0; i < edge.bra.size(); ++i)
      d = d.replaced(edge.bra[i], uside_bra_[e][i]);
  }
  dressed_cache_.emplace(key, d);
  return d;
}

const Tensor& LoopEvaluator::antiprojector(int e) {
  auto it = anti_cache_.find(e);
  if (it != anti_cache_.end()) return it->second;
  const auto& edge = net_.edge(e);

  Tensor ident;
  bool first = true;
  for (std::size_t i = 0; i < edge.ket.size(); ++i) {
    Tensor d = Tensor::identity(uside_ket_[e][i], edge.ket[i]);
    ident = first ? d : contract(ident, d);
    first = false;
  }
  for (std::size_t i = 0; i < edge.bra.size(); ++i) {
    Tensor d = Tensor::identity(uside_bra_[e][i], edge.bra[i]);
    ident = first ? d : contract(ident, d);
    first = false;
  }

  Tensor mu = messages_.at_slot(MessageSet::slot(e, true));  // flows u -> v
  for (std::size_t i = 0; i < edge.ket.size(); ++i)
    mu = mu.replaced(edge.ket[i], uside_ket_[e][i]);
  for (std::size_t i = 0; i < edge.bra.size(); ++i)
    mu = mu.replaced(edge.bra[i], uside_bra_[e][i]);
  const Tensor& mv = messages_.at_slot(MessageSet::slot(e, false));
  Tensor projector = contract(mu, mv).scaled(1.0 / edge_norms_[e]);

  Tensor anti = subtract(ident, projector);
  auto [pos, inserted] = anti_cache_.emplace(e, std::move(anti));
  return pos->second;
}

cplx LoopEvaluator::evaluate(std::span<const int> s_edges) {
  std::vector<int> s(s_edges.begin(), s_edges.end());
  std::sort(s.begin(), s.end());

  // Scale of the untouched part: all vertex scalars divided off for touched
  // vertices, and every projector edge normalized.
  std::set<int> touched;
  for (int e : s) {
    touched.insert(net_.edge(e).u);
    touched.insert(net_.edge(e).v);
  }
  cplx value = base_scale_;
  for (int v : touched) value /= vertex_scalars_[v];
  for (int e = 0; e < net_.num_edges(); ++e)
    if (!std::binary_search(s.begin(), s.end(), e)) value /= edge_norms_[e];

  if (s.empty()) return value;

  // Components of S, evaluated independently.
  std::map<int, std::vector<int>> comp_of_vertex;
  std::vector<int> comp(net_.num_vertices(), -1);
  int n_comp = 0;
  for (int v : touched) {
    if (comp[v] >= 0) continue;
    std::deque<int> queue{v};
    comp[v] = n_comp;
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop_front();
      for (int e : s) {
        const auto& edge = net_.edge(e);
        int other = -1;
        if (edge.u == x) other = edge.v;
        else if (edge.v == x) other = edge.u;
        if (other >= 0 && comp[other] < 0) {
          comp[other] = n_comp;
          queue.push_back(other);
        }
      }
    }
    ++n_comp;
  }

  for (int c = 0; c < n_comp; ++c) {
    std::vector<Tensor> operands;
    for (int v : touched) {
      if (comp[v] != c) continue;
      std::vector<int> s_local;
      for (const auto& [nbr, e] : net_.incidence()[v])
        if (std::binary_search(s.begin(), s.end(), e)) s_local.push_back(e);
      std::sort(s_local.begin(), s_local.end());
      operands.push_back(dressed_vertex(v, s_local));
    }
    for (int e : s)
      if (comp[net_.edge(e).u] == c) operands.push_back(antiprojector(e));
    Tensor r = contract_network(std::move(operands));
    if (r.rank() != 0)
      throw InvalidInputError("configuration cluster left open legs");
    value *= r.scalar();
  }
  return value;
}

cplx LoopEvaluator::w_empty() { return evaluate({}); }

cplx LoopEvaluator::corrected_sum(int l_max, std::ostream* ledger) {
  if (!configs_ || configs_l_max_ != l_max) {
    CycleBasis basis = enumerate_simple_cycles(net_.graph(), l_max);
    configs_ = enumerate_configurations(basis, net_.graph(), l_max);
    configs_l_max_ = l_max;
  }
  if (ledger) (*ledger) << "size,edges,abs_w\n";
  cplx total = 0.0;
  for (const auto& config : *configs_) {
    cplx w = evaluate(config.edges);
    total += w;
    if (ledger) {
      (*ledger) << config.edges.size() << ',';
      for (std::size_t i = 0; i < config.edges.size(); ++i)
        (*ledger) << (i ? " " : "") << config.edges[i];
      (*ledger) << ',' << std::abs(w) << '\n';
    }
  }
  return total;
}

cplx evaluate_configuration(const BpNetwork& net, const MessageSet& messages,
                            std::span<const int> s_edges) {
  LoopEvaluator evaluator(net, messages);
  return evaluator.evaluate(s_edges);
}

cplx loop_corrected_contract(const BpNetwork& net, const MessageSet& messages,
                             int l_max, std::ostream* ledger) {
  LoopEvaluator evaluator(net, messages);
  return evaluator.corrected_sum(l_max, ledger);
}

namespace {

cplx corrected_network_value(const NetworkState& state, const QubitOperators& ops,
                             const std::vector<Index>& bra, int l_max,
                             const LoopExpectationOptions& options) {
  BpNetwork net = sandwich_network_with_bra(state, ops, bra);
  MessageSet messages;
  if (options.warm_start) {
    messages = options.warm_start->messages();
    messages.set_staleness(std::numeric_limits<double>::infinity());
  } else {
    messages = init_messages(net);
  }
  BpOptions bp;
  bp.tol = options.bp_tol;
  bp.max_sweeps = options.max_sweeps;
  bp_iterate(net, messages, bp);
  return loop_corrected_contract(net, messages, l_max);
}

}  // namespace

LoopNormContext loop_norm_context(const NetworkState& state, int l_max,
                                  const LoopExpectationOptions& options) {
  LoopNormContext ctx;
  // Warm-started message tensors live on the cache's bra legs; the sandwich
  // must be built over the same legs for them to attach.
  ctx.bra = options.warm_start ? options.warm_start->bra_indices()
                               : make_bra_bonds(state);
  ctx.value = corrected_network_value(state, {}, ctx.bra, l_max, options);
  return ctx;
}

double loop_corrected_expectation_with(const NetworkState& state,
                                       const QubitOperators& ops, int l_max,
                                       const LoopNormContext& ctx,
                                       const LoopExpectationOptions& options) {
  if (std::abs(ctx.value) < 1e-14)
    throw IllConditionedStateError("loop-corrected norm is vanishingly small");
  cplx num = corrected_network_value(state, ops, ctx.bra, l_max, options);
  cplx ratio = num / ctx.value;
  if (std::abs(ratio.imag()) > 1e-8)
    throw IllConditionedStateError("expectation has a non-negligible imaginary part");
  return ratio.real();
}

double loop_corrected_expectation(const NetworkState& state, const QubitOperators& ops,
                                  int l_max, const LoopExpectationOptions& options) {
  LoopNormContext ctx = loop_norm_context(state, l_max, options);
  return loop_corrected_expectation_with(state, ops, l_max, ctx, options);
}

}  // namespace glasstn
