#include "glasstn/belief_propagation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <unordered_map>

#include "glasstn/contraction.hpp"

namespace glasstn {

std::vector<Index> BpNetwork::Edge::all_legs() const {
  std::vector<Index> legs = ket;
  legs.insert(legs.end(), bra.begin(), bra.end());
  return legs;
}

BpNetwork::BpNetwork(std::vector<std::vector<Tensor>> vertex_factors, Kind kind,
                     const std::map<std::uint64_t, std::uint64_t>& bra_of_ket)
    : factors_(std::move(vertex_factors)), kind_(kind) {
  struct Occurrence {
    int count = 0;
    int first_vertex = -1;
    int second_vertex = -1;
    Index index;
  };
  std::unordered_map<std::uint64_t, Occurrence> occ;
  const int nv = static_cast<int>(factors_.size());
  for (int v = 0; v < nv; ++v) {
    for (const auto& t : factors_[v]) {
      for (const auto& idx : t.indices()) {
        auto& o = occ[idx.id()];
        o.index = idx;
        if (o.count == 0) o.first_vertex = v;
        else if (o.count == 1) o.second_vertex = v;
        o.count += 1;
        if (o.count > 2)
          throw InvalidInputError("network leg appears more than twice");
      }
    }
  }
  std::map<std::uint64_t, std::uint64_t> ket_of_bra;
  for (const auto& [k, b] : bra_of_ket) ket_of_bra[b] = k;

  std::map<std::pair<int, int>, std::vector<Index>> shared;
  for (const auto& [id, o] : occ) {
    if (o.count == 1)
      throw InvalidInputError("network is not closed (open leg found)");
    if (o.first_vertex == o.second_vertex) continue;  // internal to one group
    int u = std::min(o.first_vertex, o.second_vertex);
    int v = std::max(o.first_vertex, o.second_vertex);
    shared[{u, v}].push_back(o.index);
  }

  std::vector<std::pair<int, int>> edge_pairs;
  for (const auto& [uv, legs] : shared) edge_pairs.push_back(uv);
  graph_ = make_graph(nv, edge_pairs);
  edges_.resize(graph_.num_edges());
  for (int e = 0; e < graph_.num_edges(); ++e) {
    const auto& [u, v] = graph_.edges[e];
    Edge edge;
    edge.u = u;
    edge.v = v;
    std::vector<Index> legs = shared.at({u, v});
    std::sort(legs.begin(), legs.end(),
              [](const Index& a, const Index& b) { return a.id() < b.id(); });
    std::map<std::uint64_t, Index> by_id;
    for (const auto& l : legs) by_id.emplace(l.id(), l);
    for (const auto& l : legs) {
      if (ket_of_bra.count(l.id())) continue;  // emitted with its ket
      auto it = bra_of_ket.find(l.id());
      if (it != bra_of_ket.end()) {
        auto bit = by_id.find(it->second);
        if (bit == by_id.end())
          throw InvalidInputError("bra leg is not shared along the same edge");
        edge.ket.push_back(l);
        edge.bra.push_back(bit->second);
      } else {
        edge.ket.push_back(l);
      }
    }
    if (kind_ != Kind::general && (edge.bra.size() != edge.ket.size() || edge.ket.empty()))
      throw InvalidInputError("paired network kind requires full ket/bra pairing");
    edges_[e] = std::move(edge);
  }
  incidence_ = graph_.incidence();
}

MessageSet::MessageSet(const BpNetwork& net, std::vector<Tensor> messages)
    : msgs_(std::move(messages)) {
  for (int e = 0; e < net.num_edges(); ++e) {
    slot_[{net.edge(e).u, net.edge(e).v}] = slot(e, true);
    slot_[{net.edge(e).v, net.edge(e).u}] = slot(e, false);
  }
}

const Tensor& MessageSet::from_to(int u, int v) const {
  auto it = slot_.find({u, v});
  if (it == slot_.end()) throw InvalidInputError("no message on this directed edge");
  return msgs_[it->second];
}

void MessageSet::replace_edge(int edge, Tensor from_u, Tensor from_v) {
  msgs_[slot(edge, true)] = std::move(from_u);
  msgs_[slot(edge, false)] = std::move(from_v);
}

namespace {

Tensor identity_message(const BpNetwork::Edge& edge) {
  if (edge.bra.empty()) {
    // No pairing: flat tensor normalized so the pair product is 1.
    std::int64_t total = 1;
    for (const auto& l : edge.ket) total *= l.dim();
    std::vector<cplx> data(static_cast<std::size_t>(total),
                           cplx(1.0 / std::sqrt(static_cast<double>(total))));
    return Tensor(edge.ket, std::move(data));
  }
  Tensor m;
  bool first = true;
  double total = 1.0;
  for (std::size_t i = 0; i < edge.ket.size(); ++i) {
    Tensor id = Tensor::identity(edge.ket[i], edge.bra[i]);
    m = first ? id : contract(m, id);
    first = false;
    total *= edge.ket[i].dim();
  }
  return m.scaled(1.0 / std::sqrt(total));
}

void project_message(const BpNetwork& net, const BpNetwork::Edge& edge, Tensor& m) {
  if (net.kind() == BpNetwork::Kind::general || edge.bra.empty()) return;
  Eigen::MatrixXcd a = to_matrix(m, edge.ket, edge.bra);
  Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
  if (net.kind() == BpNetwork::Kind::positive) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXd ev = es.eigenvalues();
    bool any_positive = false;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > 0) any_positive = true;
      else ev(i) = 0.0;
    }
    if (!any_positive)
      throw DegenerateMessageError("message has no positive part");
    h = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  }
  m = from_matrix(h, edge.ket, edge.bra);
}

// Impose M_e . M_reverse(e) = 1, balance the two Frobenius norms, and pin the
// leftover pair phase so the normalized fixed point is unique (without the
// pin, projectively converged messages keep rotating and the residual never
// settles).
void normalize_pair(const BpNetwork& net, const BpNetwork::Edge& edge, Tensor& a,
                    Tensor& b) {
  cplx s = contract(a, b).scalar();
  if (std::abs(s) < 1e-300)
    throw DegenerateMessageError("vanishing message pair product");
  cplx t = std::sqrt(s);
  double na = a.norm(), nb = b.norm();
  if (na < 1e-300 || nb < 1e-300)
    throw DegenerateMessageError("vanishing message norm");
  double r = std::sqrt(na / nb);
  a = a.scaled(1.0 / (t * r));
  b = b.scaled(r / t);

  if (net.kind() == BpNetwork::Kind::general || edge.bra.empty()) {
    // Rotate so a's largest-modulus entry is real positive.
    const auto& data = a.data();
    std::size_t anchor = 0;
    double best = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (std::abs(data[k]) > best) {
        best = std::abs(data[k]);
        anchor = k;
      }
    }
    if (best > 0.0) {
      cplx phase = data[anchor] / best;
      a = a.scaled(std::conj(phase));
      b = b.scaled(phase);
    }
  } else {
    // Hermitian messages leave only a sign; pin it with the trace.
    Eigen::MatrixXcd ma = to_matrix(a, edge.ket, edge.bra);
    double tr = ma.real().trace();
    if (std::abs(tr) > 1e-10 * ma.norm() && tr < 0.0) {
      a = a.scaled(-1.0);
      b = b.scaled(-1.0);
    }
  }
}

struct UpdateContext {
  std::vector<std::optional<ContractionPlan>> plans;  // per directed slot
};

Tensor compute_update(const BpNetwork& net, const MessageSet& messages, int v, int w,
                      int slot, UpdateContext& ctx) {
  std::vector<Tensor> operands = net.factors(v);
  for (const auto& [nbr, e] : net.incidence()[v]) {
    if (nbr == w) continue;
    operands.push_back(messages.from_to(nbr, v));
  }
  if (!ctx.plans[slot].has_value()) {
    std::vector<std::vector<Index>> legs;
    legs.reserve(operands.size());
    for (const auto& t : operands) legs.push_back(t.indices());
    ctx.plans[slot] = plan_contraction(legs, 8);
  }
  return execute_plan(std::move(operands), *ctx.plans[slot]);
}

// Sequential schedule: leaf-to-root then root-to-leaf over a BFS forest,
// followed by the non-tree directed edges. Exact in one sweep on trees.
std::vector<std::pair<int, int>> sequential_order(const BpNetwork& net) {
  const auto& g = net.graph();
  std::vector<int> parent(g.num_vertices, -1), depth(g.num_vertices, -1);
  std::vector<int> order_by_depth;
  auto adj = g.adjacency();
  for (int root = 0; root < g.num_vertices; ++root) {
    if (depth[root] >= 0) continue;
    depth[root] = 0;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      order_by_depth.push_back(v);
      for (int n : adj[v]) {
        if (depth[n] >= 0) continue;
        depth[n] = depth[v] + 1;
        parent[n] = v;
        queue.push_back(n);
      }
    }
  }
  std::stable_sort(order_by_depth.begin(), order_by_depth.end(),
                   [&](int a, int b) { return depth[a] > depth[b]; });
  std::vector<std::pair<int, int>> seq;
  for (int v : order_by_depth)
    if (parent[v] >= 0) seq.push_back({v, parent[v]});
  for (auto it = order_by_depth.rbegin(); it != order_by_depth.rend(); ++it)
    if (parent[*it] >= 0) seq.push_back({parent[*it], *it});
  for (const auto& [u, v] : g.edges) {
    if (parent[v] == u || parent[u] == v) continue;
    seq.push_back({u, v});
    seq.push_back({v, u});
  }
  return seq;
}

}  // namespace

MessageSet init_messages(const BpNetwork& net) {
  std::vector<Tensor> msgs(2 * net.num_edges());
  for (int e = 0; e < net.num_edges(); ++e) {
    msgs[MessageSet::slot(e, true)] = identity_message(net.edge(e));
    msgs[MessageSet::slot(e, false)] = identity_message(net.edge(e));
  }
  return MessageSet(net, std::move(msgs));
}

BpReport bp_iterate(const BpNetwork& net, MessageSet& messages, const BpOptions& options) {
  if (options.tol <= 0) throw InvalidInputError("bp tolerance must be positive");
  BpReport report;
  if (net.num_edges() == 0) {
    report.converged = true;
    messages.set_staleness(0.0);
    return report;
  }
  UpdateContext ctx;
  ctx.plans.resize(2 * net.num_edges());
  const bool sequential = options.schedule == BpOptions::Schedule::sequential;
  std::vector<std::pair<int, int>> seq;
  if (sequential) seq = sequential_order(net);

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double residual = 0.0;
    if (!sequential) {
      std::vector<Tensor> next(2 * net.num_edges());
      for (int e = 0; e < net.num_edges(); ++e) {
        const auto& edge = net.edge(e);
        next[MessageSet::slot(e, true)] =
            compute_update(net, messages, edge.u, edge.v, MessageSet::slot(e, true), ctx);
        next[MessageSet::slot(e, false)] =
            compute_update(net, messages, edge.v, edge.u, MessageSet::slot(e, false), ctx);
      }
      for (int e = 0; e < net.num_edges(); ++e) {
        const auto& edge = net.edge(e);
        Tensor& a = next[MessageSet::slot(e, true)];
        Tensor& b = next[MessageSet::slot(e, false)];
        if (options.damping > 0.0) {
          a = add(a.scaled(1.0 - options.damping),
                  messages.at_slot(MessageSet::slot(e, true)).scaled(options.damping));
          b = add(b.scaled(1.0 - options.damping),
                  messages.at_slot(MessageSet::slot(e, false)).scaled(options.damping));
        }
        project_message(net, edge, a);
        project_message(net, edge, b);
        normalize_pair(net, edge, a, b);
        residual = std::max(
            residual, subtract(a, messages.at_slot(MessageSet::slot(e, true))).norm());
        residual = std::max(
            residual, subtract(b, messages.at_slot(MessageSet::slot(e, false))).norm());
        messages.at_slot(MessageSet::slot(e, true)) = std::move(a);
        messages.at_slot(MessageSet::slot(e, false)) = std::move(b);
      }
    } else {
      for (const auto& [v, w] : seq) {
        const int e = net.graph().edge_index(v, w);
        const auto& edge = net.edge(e);
        const bool from_u = (v == edge.u);
        const int s = MessageSet::slot(e, from_u);
        const int s_rev = MessageSet::slot(e, !from_u);
        Tensor upd = compute_update(net, messages, v, w, s, ctx);
        if (options.damping > 0.0)
          upd = add(upd.scaled(1.0 - options.damping),
                    messages.at_slot(s).scaled(options.damping));
        project_message(net, edge, upd);
        Tensor rev = messages.at_slot(s_rev);
        // The pair phase is always anchored on the u -> v direction.
        if (from_u) normalize_pair(net, edge, upd, rev);
        else normalize_pair(net, edge, rev, upd);
        residual = std::max(residual, subtract(upd, messages.at_slot(s)).norm());
        messages.at_slot(s) = std::move(upd);
        messages.at_slot(s_rev) = std::move(rev);
      }
    }
    report.residuals.push_back(residual);
    report.sweeps = sweep + 1;
    messages.bump_iterations(1);
    messages.set_staleness(residual);
    if (residual <= options.tol) {
      report.converged = true;
      return report;
    }
  }
  throw NonConvergenceError("belief propagation did not converge in " +
                                std::to_string(options.max_sweeps) + " sweeps",
                            report.residuals);
}

std::vector<cplx> bp_vertex_scalars(const BpNetwork& net, const MessageSet& messages) {
  std::vector<cplx> out(net.num_vertices());
  for (int v = 0; v < net.num_vertices(); ++v) {
    std::vector<Tensor> operands = net.factors(v);
    for (const auto& [nbr, e] : net.incidence()[v])
      operands.push_back(messages.from_to(nbr, v));
    Tensor r = contract_network(std::move(operands));
    if (r.rank() != 0)
      throw InvalidInputError("vertex scalar contraction left open legs");
    out[v] = r.scalar();
  }
  return out;
}

cplx bp_contract(const BpNetwork& net, const MessageSet& messages) {
  cplx numerator = 1.0;
  for (cplx n : bp_vertex_scalars(net, messages)) numerator *= n;
  cplx denominator = 1.0;
  for (int e = 0; e < net.num_edges(); ++e) {
    cplx d = contract(messages.at_slot(MessageSet::slot(e, true)),
                      messages.at_slot(MessageSet::slot(e, false)))
                 .scalar();
    if (std::abs(d) < 1e-300)
      throw DegenerateMessageError("zero denominator factor in bp contraction");
    denominator *= d;
  }
  return numerator / denominator;
}

std::pair<Tensor, Tensor> edge_environment(const MessageSet& messages, int edge) {
  return {messages.at_slot(MessageSet::slot(edge, true)),
          messages.at_slot(MessageSet::slot(edge, false))};
}

void write_convergence_csv(const BpReport& report, std::ostream& out) {
  out << "sweep,max_residual\n";
  for (std::size_t i = 0; i < report.residuals.size(); ++i)
    out << (i + 1) << ',' << report.residuals[i] << '\n';
}

// --- State-bound helpers -----------------------------------------------------

namespace {

Eigen::MatrixXcd vertex_operator(const NetworkState& state, int vertex,
                                 const QubitOperators& ops) {
  const auto& qs = state.lattice().vertex_qubits[vertex];
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  bool nontrivial = false;
  for (int q : qs) {
    Eigen::Matrix2cd o = Eigen::Matrix2cd::Identity();
    auto it = ops.find(q);
    if (it != ops.end()) {
      o = it->second;
      nontrivial = true;
    }
    Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        next.block(i * 2, j * 2, 2, 2) = m(i, j) * o;
    m = next;
  }
  return nontrivial ? m : Eigen::MatrixXcd();
}

BpNetwork build_sandwich(const NetworkState& state, const QubitOperators& ops,
                         const std::vector<Index>& bra, BpNetwork::Kind kind) {
  const auto& lat = state.lattice();
  std::map<std::uint64_t, std::uint64_t> bra_of_ket;
  for (int e = 0; e < lat.graph.num_edges(); ++e)
    bra_of_ket[state.bond_index(e).id()] = bra[e].id();

  auto inc = lat.graph.incidence();
  std::vector<std::vector<Tensor>> factors(lat.graph.num_vertices);
  for (int v = 0; v < lat.graph.num_vertices; ++v) {
    const Tensor& ket = state.tensor(v);
    Eigen::MatrixXcd op = vertex_operator(state, v, ops);
    Tensor bra_t = ket.conj();
    for (const auto& [nbr, e] : inc[v])
      bra_t = bra_t.replaced(state.bond_index(e), bra[e]);
    factors[v].push_back(ket);
    if (op.size() != 0) {
      std::vector<Index> unprimed, primed;
      for (std::size_t s = 0; s < lat.vertex_qubits[v].size(); ++s) {
        unprimed.push_back(state.phys_index(v, static_cast<int>(s)));
        primed.push_back(unprimed.back().sibling());
      }
      factors[v].push_back(from_matrix(op, primed, unprimed));
      for (std::size_t s = 0; s < primed.size(); ++s)
        bra_t = bra_t.replaced(unprimed[s], primed[s]);
    }
    factors[v].push_back(std::move(bra_t));
  }
  return BpNetwork(std::move(factors), kind, bra_of_ket);
}

std::vector<Index> make_bra_indices(const NetworkState& state) {
  std::vector<Index> bra;
  bra.reserve(state.num_edges());
  for (int e = 0; e < state.num_edges(); ++e)
    bra.push_back(state.bond_index(e).sibling("bra:" + std::to_string(e)));
  return bra;
}

}  // namespace

BpNetwork norm_network(const NetworkState& state) {
  return build_sandwich(state, {}, make_bra_indices(state), BpNetwork::Kind::positive);
}

BpNetwork sandwich_network(const NetworkState& state, const QubitOperators& ops) {
  return build_sandwich(state, ops, make_bra_indices(state),
                        ops.empty() ? BpNetwork::Kind::positive
                                    : BpNetwork::Kind::hermitian);
}

std::vector<Index> make_bra_bonds(const NetworkState& state) {
  return make_bra_indices(state);
}

BpNetwork sandwich_network_with_bra(const NetworkState& state, const QubitOperators& ops,
                                    const std::vector<Index>& bra) {
  return build_sandwich(state, ops, bra,
                        ops.empty() ? BpNetwork::Kind::positive
                                    : BpNetwork::Kind::hermitian);
}

NormMessages::NormMessages(const NetworkState& state)
    : bra_(make_bra_indices(state)), graph_(state.lattice().graph) {
  BpNetwork net = network_view(state);
  if (net.graph().edges != graph_.edges)
    throw InvalidInputError("norm network edges disagree with the lattice");
  messages_ = init_messages(net);
}

BpNetwork NormMessages::network_view(const NetworkState& state) const {
  return build_sandwich(state, {}, bra_, BpNetwork::Kind::positive);
}

BpReport NormMessages::converge(const NetworkState& state, const BpOptions& options) {
  BpNetwork net = network_view(state);
  return bp_iterate(net, messages_, options);
}

void NormMessages::refresh_edge(const NetworkState& state, int edge,
                                const std::vector<double>& lambda) {
  bra_[edge] = state.bond_index(edge).sibling("bra:" + std::to_string(edge));
  double total = 0.0;
  for (double l : lambda) total += l * l;
  if (total <= 0.0) throw DegenerateMessageError("vanishing bond spectrum");
  std::vector<double> normalized = lambda;
  for (double& l : normalized) l /= std::sqrt(total);
  Tensor m = Tensor::diag(state.bond_index(edge), bra_[edge], normalized);
  messages_.replace_edge(edge, m, m);
}

void normalize_bp(NetworkState& state, const NormMessages& messages) {
  BpNetwork net = messages.network_view(state);
  std::vector<cplx> scalars = bp_vertex_scalars(net, messages.messages());
  for (int v = 0; v < state.num_vertices(); ++v) {
    double n = scalars[v].real();
    if (n <= 0.0 || std::abs(scalars[v].imag()) > 1e-6 * std::abs(n))
      throw IllConditionedStateError("vertex scalar is not positive");
    state.set_tensor(v, state.tensor(v).scaled(1.0 / std::sqrt(n)));
  }
}

}  // namespace glasstn
