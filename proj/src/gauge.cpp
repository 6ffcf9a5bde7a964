#include "glasstn/gauge.hpp"

#include <algorithm>
#include <cmath>

#include "glasstn/contraction.hpp"

namespace glasstn {

namespace {

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a) {
  return 0.5 * (a + a.adjoint());
}

struct RootPair {
  Eigen::MatrixXcd root;      // E^(1/2) restricted to the supported subspace
  Eigen::MatrixXcd inv_root;  // pseudo-inverse of `root`
  double cond = 1.0;          // eigenvalue ratio over the kept subspace
  int kept = 0;
};

// Square roots with pseudo-inverse semantics: eigenvalues below
// rel_floor * top are treated as zero, so dress/undress projects onto the
// environment's support instead of amplifying noise in dead directions.
RootPair message_roots(const Eigen::MatrixXcd& env, double rel_floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(env));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev(ev.size() - 1);
  if (!(top > 0.0))
    throw DegenerateMessageError("message environment has no positive weight");
  RootPair out;
  const double floor = rel_floor * top;
  double min_kept = top;
  Eigen::VectorXd sq(ev.size()), isq(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > floor) {
      sq(i) = std::sqrt(ev(i));
      isq(i) = 1.0 / sq(i);
      min_kept = std::min(min_kept, ev(i));
      out.kept += 1;
    } else {
      sq(i) = 0.0;
      isq(i) = 0.0;
    }
  }
  out.cond = top / min_kept;
  out.root = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().adjoint();
  out.inv_root = es.eigenvectors() * isq.asDiagonal() * es.eigenvectors().adjoint();
  return out;
}

Tensor absorb_on_leg(const Tensor& t, const Index& leg, const Eigen::MatrixXcd& m) {
  Index tmp = leg.sibling();
  std::vector<Index> r{tmp}, c{leg};
  return contract(from_matrix(m, r, c), t).replaced(tmp, leg);
}

// Split off (phys legs + bond) with an orthogonal rest factor.
struct QrSplit {
  Tensor q;  // [rest..., link] or scalar 1 when there is no rest
  Tensor r;  // [link, phys..., bond]
  Index link;
};

QrSplit qr_split(const Tensor& t, const std::vector<Index>& keep) {
  std::vector<Index> rest;
  for (const auto& idx : t.indices()) {
    bool kept = false;
    for (const auto& k : keep)
      if (k == idx) { kept = true; break; }
    if (!kept) rest.push_back(idx);
  }
  QrSplit out;
  if (rest.empty()) {
    out.link = Index::make(1, "qlink");
    std::vector<Index> r{out.link}, c;
    out.q = from_matrix(Eigen::MatrixXcd::Identity(1, 1), c, r);
    std::vector<Index> with_link{out.link};
    with_link.insert(with_link.end(), keep.begin(), keep.end());
    Tensor expanded = t;  // prepend a trivial link leg
    std::vector<cplx> data(t.permuted(keep).data());
    out.r = Tensor(with_link, std::move(data));
    return out;
  }
  Eigen::MatrixXcd mat = to_matrix(t, rest, keep);
  const Eigen::Index rank = std::min(mat.rows(), mat.cols());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(mat);
  Eigen::MatrixXcd thin_q =
      qr.householderQ() * Eigen::MatrixXcd::Identity(mat.rows(), rank);
  Eigen::MatrixXcd r =
      qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  out.link = Index::make(static_cast<int>(rank), "qlink");
  std::vector<Index> link{out.link};
  out.q = from_matrix(thin_q, rest, link);
  out.r = from_matrix(r, link, keep);
  return out;
}

std::vector<Index> phys_plus_bond(const NetworkState& state, int vertex, int edge) {
  std::vector<Index> keep;
  for (std::size_t s = 0; s < state.lattice().vertex_qubits[vertex].size(); ++s)
    keep.push_back(state.phys_index(vertex, static_cast<int>(s)));
  keep.push_back(state.bond_index(edge));
  return keep;
}

}  // namespace

TruncationReport apply_two_site_gate_bp(NetworkState& state, int edge,
                                        const Eigen::MatrixXcd& gate,
                                        NormMessages& messages, int chi_max,
                                        const GateOptions& options) {
  if (messages.staleness() > options.stale_tol)
    throw StaleEnvironmentError(
        "message staleness " + std::to_string(messages.staleness()) +
        " exceeds tolerance; re-run belief propagation");
  if (chi_max < 1) throw InvalidInputError("chi_max must be >= 1");

  const auto& g = state.lattice().graph;
  const auto [u, v] = g.edges[edge];
  const int du = state.lattice().phys_dim(u);
  const int dv = state.lattice().phys_dim(v);
  if (gate.rows() != du * dv || gate.cols() != du * dv)
    throw InvalidInputError("gate dimension does not match the edge");

  auto inc = g.incidence();
  struct Dressing {
    Index leg;
    Eigen::MatrixXcd inv_root;
  };
  auto dress = [&](int vertex, int other) {
    std::vector<Dressing> undo;
    Tensor t = state.tensor(vertex);
    for (const auto& [nbr, f] : inc[vertex]) {
      if (nbr == other) continue;
      const Tensor& msg = messages.message(nbr, vertex);
      std::vector<Index> kets{state.bond_index(f)};
      std::vector<Index> bras{messages.bra_index(f)};
      RootPair roots = message_roots(to_matrix(msg, kets, bras), options.env_floor);
      t = absorb_on_leg(t, state.bond_index(f), roots.root);
      undo.push_back({state.bond_index(f), roots.inv_root});
    }
    return std::make_pair(t, undo);
  };

  auto [tu, undo_u] = dress(u, v);
  auto [tv, undo_v] = dress(v, u);

  QrSplit qu = qr_split(tu, phys_plus_bond(state, u, edge));
  QrSplit qv = qr_split(tv, phys_plus_bond(state, v, edge));

  Tensor theta = contract(qu.r, qv.r);

  std::vector<Index> unprimed, primed;
  for (std::size_t s = 0; s < state.lattice().vertex_qubits[u].size(); ++s) {
    unprimed.push_back(state.phys_index(u, static_cast<int>(s)));
    primed.push_back(unprimed.back().sibling());
  }
  for (std::size_t s = 0; s < state.lattice().vertex_qubits[v].size(); ++s) {
    unprimed.push_back(state.phys_index(v, static_cast<int>(s)));
    primed.push_back(unprimed.back().sibling());
  }
  theta = contract(theta, from_matrix(gate, primed, unprimed));
  for (std::size_t k = 0; k < primed.size(); ++k)
    theta = theta.replaced(primed[k], unprimed[k]);

  std::vector<Index> left{qu.link};
  for (std::size_t s = 0; s < state.lattice().vertex_qubits[u].size(); ++s)
    left.push_back(state.phys_index(u, static_cast<int>(s)));
  Factorization f = factorize(theta, left, chi_max, options.cutoff);

  TruncationReport report;
  report.discarded_weight = f.discarded_weight;
  report.new_dim = f.bond.dim();

  // Rescale the kept spectrum so the state norm is preserved.
  std::vector<double> lambda = f.singular_values;
  if (report.discarded_weight > 0.0 && report.discarded_weight < 1.0) {
    const double scale = 1.0 / std::sqrt(1.0 - report.discarded_weight);
    for (double& l : lambda) l *= scale;
  }
  std::vector<double> sqrt_lambda(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) sqrt_lambda[i] = std::sqrt(lambda[i]);

  Index new_bond = Index::make(f.bond.dim(), "bond:" + std::to_string(edge));
  Tensor au = f.left.weighted(f.bond, sqrt_lambda).replaced(f.bond, new_bond);
  Tensor av = f.right.weighted(f.bond, sqrt_lambda).replaced(f.bond, new_bond);

  Tensor new_tu = contract(qu.q, au);
  Tensor new_tv = contract(qv.q, av);
  for (const auto& d : undo_u) new_tu = absorb_on_leg(new_tu, d.leg, d.inv_root);
  for (const auto& d : undo_v) new_tv = absorb_on_leg(new_tv, d.leg, d.inv_root);

  state.set_bond(edge, new_bond, std::move(new_tu), std::move(new_tv));
  messages.refresh_edge(state, edge, lambda);
  return report;
}

NetworkState to_vidal_gauge(const NetworkState& state, const NormMessages& messages,
                            const GaugeOptions& options) {
  NetworkState out = state;
  std::vector<std::vector<double>> weights(out.num_edges());
  for (int e = 0; e < out.num_edges(); ++e) {
    const auto [u, v] = out.lattice().graph.edges[e];
    std::vector<Index> kets{out.bond_index(e)};
    std::vector<Index> bras{messages.bra_index(e)};
    Eigen::MatrixXcd env_u = to_matrix(messages.message(u, v), kets, bras);
    Eigen::MatrixXcd env_v = to_matrix(messages.message(v, u), kets, bras);
    RootPair xu, xv;
    try {
      xu = message_roots(env_u, options.env_floor);
      xv = message_roots(env_v, options.env_floor);
    } catch (const DegenerateMessageError& err) {
      throw GaugeFailureError("edge " + std::to_string(e) + ": " + err.what());
    }

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(xu.root.transpose() * xv.root,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (!(sv(0) > 0.0))
      throw GaugeFailureError("edge " + std::to_string(e) + ": vanishing bond spectrum");
    // Directions past the conditioning limit are collapsed out of the bond
    // rather than inverted.
    int keep = 0;
    const double floor = sv(0) * std::max(options.env_floor, 1.0 / options.cond_limit);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > floor) ++keep;
    Eigen::VectorXd inv_sqrt(keep), sqrt_s(keep);
    for (int i = 0; i < keep; ++i) {
      sqrt_s(i) = std::sqrt(sv(i));
      inv_sqrt(i) = 1.0 / sqrt_s(i);
    }
    Eigen::MatrixXcd vk = svd.matrixV().leftCols(keep);
    Eigen::MatrixXcd gauge = xv.root * vk * inv_sqrt.asDiagonal();
    Eigen::MatrixXcd gauge_inv = sqrt_s.asDiagonal() * vk.adjoint() * xv.inv_root;

    Index new_bond = Index::make(keep, "bond:" + std::to_string(e));
    const Index old_bond = out.bond_index(e);
    std::vector<Index> oldv{old_bond}, newv{new_bond};
    Tensor tu = contract(out.tensor(u), from_matrix(gauge, oldv, newv));
    Tensor tv = contract(from_matrix(gauge_inv, newv, oldv), out.tensor(v));
    out.set_bond(e, new_bond, std::move(tu), std::move(tv));
    weights[e].assign(sv.data(), sv.data() + keep);
  }
  out.set_bond_weights(std::move(weights));
  return out;
}

namespace {

Tensor sliced_leg(const Tensor& t, const Index& leg, const Index& smaller) {
  std::vector<Index> order{leg};
  for (const auto& idx : t.indices())
    if (idx != leg) order.push_back(idx);
  Tensor p = t.permuted(order);
  std::int64_t inner = p.size() / leg.dim();
  std::vector<cplx> data(p.data().begin(),
                         p.data().begin() + smaller.dim() * inner);
  order[0] = smaller;
  return Tensor(order, std::move(data));
}

}  // namespace

NetworkState truncate_state(const NetworkState& state, const NormMessages& messages,
                            int chi_target, const GaugeOptions& options) {
  if (chi_target < 1) throw InvalidInputError("chi_target must be >= 1");
  NetworkState vidal = to_vidal_gauge(state, messages, options);
  NetworkState out = vidal;
  for (int e = 0; e < out.num_edges(); ++e) {
    const int dim = out.bond_dim(e);
    if (dim <= chi_target) continue;
    const auto [u, v] = out.lattice().graph.edges[e];
    Index smaller = Index::make(chi_target, "bond:" + std::to_string(e));
    Tensor tu = sliced_leg(out.tensor(u), out.bond_index(e), smaller);
    Tensor tv = sliced_leg(out.tensor(v), out.bond_index(e), smaller);
    out.set_bond(e, smaller, std::move(tu), std::move(tv));
  }
  out.clear_bond_weights();
  return out;
}

}  // namespace glasstn
