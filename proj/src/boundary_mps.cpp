#include "glasstn/boundary_mps.hpp"

#include <algorithm>
#include <cmath>

#include "glasstn/contraction.hpp"
#include "glasstn/hashing.hpp"
#include "glasstn/parallel.hpp"

namespace glasstn {

CylinderSandwich::CylinderSandwich(const NetworkState& state, const QubitOperators& ops,
                                   std::vector<std::vector<int>> columns, bool ring,
                                   const std::vector<Index>* shared_bra)
    : net_(shared_bra ? sandwich_network_with_bra(state, ops, *shared_bra)
                      : sandwich_network(state, ops)),
      columns_(std::move(columns)),
      ring_(ring) {
  if (columns_.empty()) throw InvalidInputError("empty column partition");
  const int nv = net_.num_vertices();
  column_of_.assign(nv, -1);
  row_of_.assign(nv, -1);
  for (int c = 0; c < num_columns(); ++c) {
    for (int r = 0; r < rows(c); ++r) {
      int v = columns_[c][r];
      if (v < 0 || v >= nv || column_of_[v] >= 0)
        throw InvalidInputError("column partition is not a partition");
      column_of_[v] = c;
      row_of_[v] = r;
    }
  }
  for (int v = 0; v < nv; ++v)
    if (column_of_[v] < 0)
      throw InvalidInputError("column partition misses a vertex");

  phys_.resize(nv);
  for (int v = 0; v < nv; ++v) {
    const auto& qs = state.lattice().vertex_qubits[v];
    if (qs.size() == 1) phys_[v] = state.phys_index(v, 0);
  }

  const int ncuts = num_cuts();
  cuts_.resize(std::max(ncuts, 0));
  for (int e = 0; e < net_.num_edges(); ++e) {
    const auto& edge = net_.edge(e);
    int cu = column_of_[edge.u], cv = column_of_[edge.v];
    if (cu == cv) continue;  // vertical, handled implicitly by leg ids
    int lo = std::min(cu, cv), hi = std::max(cu, cv);
    int cut;
    if (hi == lo + 1) cut = lo;
    else if (ring_ && lo == 0 && hi == num_columns() - 1) cut = hi;
    else
      throw InvalidInputError("edge crosses non-adjacent columns");
    if (edge.ket.size() != 1 || edge.bra.size() != 1)
      throw InvalidInputError("cut edges must carry one ket/bra pair");
    CutSite site;
    site.ket = edge.ket[0];
    site.bra = edge.bra[0];
    int lo_vertex = (column_of_[edge.u] == (cut % num_columns())) ? edge.u : edge.v;
    int hi_vertex = (lo_vertex == edge.u) ? edge.v : edge.u;
    site.row_lo = row_of_[lo_vertex];
    site.row_hi = row_of_[hi_vertex];
    cuts_[cut].push_back(site);
  }
  for (auto& cut : cuts_) {
    std::sort(cut.begin(), cut.end(), [](const CutSite& a, const CutSite& b) {
      return a.row_lo < b.row_lo;
    });
    for (std::size_t i = 0; i + 1 < cut.size(); ++i)
      if (cut[i].row_lo == cut[i + 1].row_lo)
        throw InvalidInputError("more than one cut edge on a row");
  }
}

const std::vector<Tensor>& CylinderSandwich::factors(int c, int row) const {
  return net_.factors(columns_[c][row]);
}

const Index& CylinderSandwich::phys(int c, int row) const {
  const Index& p = phys_[columns_[c][row]];
  if (!p.valid())
    throw InvalidInputError("RDM readout requires single-qubit vertices");
  return p;
}

Tensor CylinderSandwich::ket_with_phys(int c, int row, const Index& fresh) const {
  const std::vector<Tensor>& fs = factors(c, row);
  return fs.front().replaced(phys(c, row), fresh);
}

// --- MPS utilities ----------------------------------------------------------

MpsMessage random_mps_message(const std::vector<CylinderSandwich::CutSite>& cut,
                              int rank, std::uint64_t seed) {
  if (cut.empty()) throw InvalidInputError("cannot build a message on an empty cut");
  std::mt19937_64 rng(seed);
  MpsMessage m;
  m.max_rank = rank;
  const int n = static_cast<int>(cut.size());
  m.vbonds.push_back(Index::make(1, "mps"));
  for (int i = 0; i + 1 < n; ++i) m.vbonds.push_back(Index::make(rank, "mps"));
  m.vbonds.push_back(Index::make(1, "mps"));
  for (int i = 0; i < n; ++i) {
    Tensor t = Tensor::random({m.vbonds[i], cut[i].ket, cut[i].bra, m.vbonds[i + 1]}, rng);
    m.sites.push_back(t.scaled(1.0 / t.norm()));
  }
  m.ortho_center = -1;
  return m;
}

MpsMessage identity_mps_message(const std::vector<CylinderSandwich::CutSite>& cut) {
  MpsMessage m;
  m.max_rank = 1;
  const int n = static_cast<int>(cut.size());
  for (int i = 0; i <= n; ++i) m.vbonds.push_back(Index::make(1, "mps"));
  for (int i = 0; i < n; ++i) {
    Tensor id = Tensor::identity(cut[i].ket, cut[i].bra);
    Tensor site = contract(contract(Tensor({m.vbonds[i]}, {1.0}), id),
                           Tensor({m.vbonds[i + 1]}, {1.0}));
    m.sites.push_back(site.scaled(1.0 / site.norm()));
  }
  m.ortho_center = -1;
  return m;
}

cplx mps_overlap(const MpsMessage& a, const MpsMessage& b) {
  Tensor env(cplx(1.0));
  for (std::size_t i = 0; i < a.sites.size(); ++i)
    env = contract(contract(env, a.sites[i]), b.sites[i]);
  if (env.rank() != 0) throw InvalidInputError("mps overlap left open legs");
  return env.scalar();
}

namespace {

// Orthogonality shift: QR the center toward its neighbor, absorbing R.
void shift_right(MpsMessage& m, int s) {
  Tensor& cur = m.sites[s];
  std::vector<Index> rows;
  for (const auto& idx : cur.indices())
    if (idx != m.vbonds[s + 1]) rows.push_back(idx);
  std::vector<Index> cols{m.vbonds[s + 1]};
  Eigen::MatrixXcd mat = to_matrix(cur, rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(mat);
  Eigen::Index rank = std::min(mat.rows(), mat.cols());
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(mat.rows(), rank);
  Eigen::MatrixXcd r = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  Index nb = Index::make(static_cast<int>(rank), "mps");
  std::vector<Index> nbv{nb};
  m.sites[s] = from_matrix(q, rows, nbv);
  m.sites[s + 1] = contract(from_matrix(r, nbv, cols), m.sites[s + 1]);
  m.vbonds[s + 1] = nb;
}

void shift_left(MpsMessage& m, int s) {
  Tensor& cur = m.sites[s];
  std::vector<Index> cols;
  for (const auto& idx : cur.indices())
    if (idx != m.vbonds[s]) cols.push_back(idx);
  std::vector<Index> rows{m.vbonds[s]};
  // Orthonormal rows via QR of the adjoint.
  Eigen::MatrixXcd mat = to_matrix(cur, rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(mat.adjoint());
  Eigen::Index rank = std::min(mat.rows(), mat.cols());
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(mat.cols(), rank);
  Eigen::MatrixXcd r = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  Index nb = Index::make(static_cast<int>(rank), "mps");
  std::vector<Index> nbv{nb};
  m.sites[s] = from_matrix(q.adjoint(), nbv, cols);
  m.sites[s - 1] = contract(m.sites[s - 1], from_matrix(r.adjoint(), rows, nbv));
  m.vbonds[s] = nb;
}

}  // namespace

MpsMessage compress_mps(const MpsMessage& m, int rank) {
  bool oversized = false;
  for (const auto& b : m.vbonds) oversized |= b.dim() > rank;
  MpsMessage out = m;
  out.max_rank = rank;
  if (!oversized) return out;
  const int n = static_cast<int>(out.sites.size());
  for (int s = n - 1; s > 0; --s) shift_left(out, s);
  for (int s = 0; s + 1 < n; ++s) {
    Tensor& cur = out.sites[s];
    std::vector<Index> left;
    for (const auto& idx : cur.indices())
      if (idx != out.vbonds[s + 1]) left.push_back(idx);
    Factorization f = factorize(cur, left, rank);
    out.sites[s] = f.left;
    Tensor rest = f.right.weighted(f.bond, f.singular_values);
    out.sites[s + 1] = contract(rest, out.sites[s + 1]);
    out.vbonds[s + 1] = f.bond;
  }
  double norm = out.sites[n - 1].norm();
  if (norm > 0) out.sites[n - 1] = out.sites[n - 1].scaled(1.0 / norm);
  return out;
}

namespace {

struct ColumnPlan {
  // Per row: the message site index attached on each side (-1 when absent).
  std::vector<int> a_site, b_site;
};

ColumnPlan column_plan(const CylinderSandwich& sw, int column, int a_cut, int b_cut) {
  ColumnPlan plan;
  plan.a_site.assign(sw.rows(column), -1);
  plan.b_site.assign(sw.rows(column), -1);
  auto fill = [&](int cut, std::vector<int>& out) {
    if (cut < 0) return;
    const auto& sites = sw.cut(cut);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const bool lo_side = (cut % sw.num_columns()) == column;
      int row = lo_side ? sites[i].row_lo : sites[i].row_hi;
      out[row] = static_cast<int>(i);
    }
  };
  fill(a_cut, plan.a_site);
  fill(b_cut, plan.b_site);
  return plan;
}

Tensor row_step(const CylinderSandwich& sw, int column, int row, const Tensor& env,
                const MpsMessage* a, int a_site, const MpsMessage* b, int b_site) {
  std::vector<Tensor> ops{env};
  for (const auto& f : sw.factors(column, row)) ops.push_back(f);
  if (a && a_site >= 0) ops.push_back(a->sites[a_site]);
  if (b && b_site >= 0) ops.push_back(b->sites[b_site]);
  return contract_network(std::move(ops));
}

cplx column_value(const CylinderSandwich& sw, int column, const MpsMessage* left,
                  int left_cut, const MpsMessage* right, int right_cut) {
  ColumnPlan plan = column_plan(sw, column, left_cut, right_cut);
  Tensor env(cplx(1.0));
  for (int row = 0; row < sw.rows(column); ++row)
    env = row_step(sw, column, row, env, left, plan.a_site[row], right,
                   plan.b_site[row]);
  if (env.rank() != 0) throw InvalidInputError("column contraction left open legs");
  return env.scalar();
}

}  // namespace

MpsMessage fit_mps_message(const CylinderSandwich& sw, int column, bool forward,
                           const MpsMessage* incoming, const MpsMessage& init,
                           const BmpsOptions& options, FitReport* report) {
  const int c = column;
  const int n_cols = sw.num_columns();
  const int in_cut = forward ? (c - 1 + n_cols) % n_cols : c;
  const int out_cut = forward ? c : (c - 1 + n_cols) % n_cols;
  MpsMessage b = compress_mps(init, options.rank);
  ColumnPlan plan = column_plan(sw, c, incoming ? in_cut : -1, out_cut);
  const int rows = sw.rows(c);
  const int n_sites = static_cast<int>(b.sites.size());

  // tops[r] contracts rows < r; bottoms[r] contracts rows >= r.
  std::vector<Tensor> tops(rows + 1), bottoms(rows + 1);
  auto rebuild_top = [&](int r) {
    tops[r + 1] = row_step(sw, c, r, tops[r], incoming, plan.a_site[r], &b,
                           plan.b_site[r]);
  };
  auto rebuild_bottom = [&](int r) {
    bottoms[r] = row_step(sw, c, r, bottoms[r + 1], incoming, plan.a_site[r], &b,
                          plan.b_site[r]);
  };
  tops[0] = Tensor(cplx(1.0));
  bottoms[rows] = Tensor(cplx(1.0));
  for (int r = rows - 1; r >= 0; --r) rebuild_bottom(r);

  std::vector<int> site_row(n_sites, -1);
  for (int r = 0; r < rows; ++r)
    if (plan.b_site[r] >= 0) site_row[plan.b_site[r]] = r;

  double cost = 0.0, prev_cost = -1.0;
  int sweeps = 0;
  auto update_site = [&](int s) {
    const int r = site_row[s];
    std::vector<Tensor> ops{tops[r]};
    for (const auto& f : sw.factors(c, r)) ops.push_back(f);
    if (incoming && plan.a_site[r] >= 0) ops.push_back(incoming->sites[plan.a_site[r]]);
    ops.push_back(bottoms[r + 1]);
    Tensor phi = contract_network(std::move(ops));
    double nrm = phi.norm();
    if (!(nrm > 1e-300)) throw FittingDegenerateError("zero-norm fitting candidate");
    b.sites[s] = phi.conj().scaled(1.0 / nrm);
    cost = nrm;
    if (report) report->cost_trace.push_back(nrm);
  };

  for (sweeps = 1; sweeps <= options.max_fit_sweeps; ++sweeps) {
    // Downward: orthogonality center moves to the last site.
    for (int s = 0; s < n_sites; ++s) {
      update_site(s);
      if (s + 1 < n_sites) {
        shift_right(b, s);
        for (int r = site_row[s]; r < site_row[s + 1]; ++r) rebuild_top(r);
      }
    }
    // Upward.
    for (int s = n_sites - 1; s >= 0; --s) {
      update_site(s);
      if (s > 0) {
        shift_left(b, s);
        for (int r = site_row[s]; r > site_row[s - 1]; --r) rebuild_bottom(r);
      }
    }
    // Refresh the top environments invalidated by the upward pass.
    for (int r = 0; r < rows; ++r) rebuild_top(r);
    if (prev_cost >= 0.0 && std::abs(cost - prev_cost) <= options.fit_tol * std::abs(cost))
      break;
    prev_cost = cost;
  }
  b.ortho_center = 0;
  if (report) {
    report->cost = cost;
    report->sweeps = std::min(sweeps, options.max_fit_sweeps);
  }
  return b;
}

RingResult ring_converge(const CylinderSandwich& sw, const BmpsOptions& options,
                         const RingResult* warm) {
  const int n_cols = sw.num_columns();
  const int n_cuts = sw.num_cuts();
  if (n_cuts <= 0) throw InvalidInputError("partition has no cuts");

  RingResult ring;
  if (warm) {
    ring.forward = warm->forward;
    ring.backward = warm->backward;
  } else {
    for (int cut = 0; cut < n_cuts; ++cut) {
      ring.forward.push_back(identity_mps_message(sw.cut(cut)));
      ring.backward.push_back(identity_mps_message(sw.cut(cut)));
    }
  }

  auto scalar_estimate = [&]() {
    cplx numerator = 1.0;
    for (int c = 0; c < n_cols; ++c) {
      const int lcut = (c - 1 + n_cols) % n_cols;
      const bool has_left = sw.ring() || c > 0;
      const bool has_right = sw.ring() || c + 1 < n_cols;
      numerator *= column_value(sw, c, has_left ? &ring.forward[lcut] : nullptr,
                                has_left ? lcut : -1,
                                has_right ? &ring.backward[c] : nullptr,
                                has_right ? c : -1);
    }
    cplx denominator = 1.0;
    for (int cut = 0; cut < n_cuts; ++cut)
      denominator *= mps_overlap(ring.forward[cut], ring.backward[cut]);
    if (std::abs(denominator) < 1e-300)
      throw DegenerateMessageError("vanishing message overlap in the ring");
    return numerator / denominator;
  };

  cplx prev = 0.0;
  for (int lap = 1; lap <= options.max_laps; ++lap) {
    for (int c = 0; c < n_cols; ++c) {
      if (!sw.ring() && c + 1 >= n_cols) break;
      const int out_cut = c;
      const int in_cut = (c - 1 + n_cols) % n_cols;
      const bool has_in = sw.ring() || c > 0;
      const MpsMessage* in = has_in ? &ring.forward[in_cut] : nullptr;
      MpsMessage init = (lap == 1 && !warm)
                            ? random_mps_message(sw.cut(out_cut), options.rank,
                                                 fnv1a64_pod(out_cut * 2))
                            : ring.forward[out_cut];
      ring.forward[out_cut] = fit_mps_message(sw, c, true, in, init, options);
    }
    for (int c = n_cols - 1; c >= 0; --c) {
      if (!sw.ring() && c == 0) break;
      const int out_cut = (c - 1 + n_cols) % n_cols;
      const int in_cut = c;
      const bool has_in = sw.ring() || c + 1 < n_cols;
      const MpsMessage* in = has_in ? &ring.backward[in_cut] : nullptr;
      MpsMessage init = (lap == 1 && !warm)
                            ? random_mps_message(sw.cut(out_cut), options.rank,
                                                 fnv1a64_pod(out_cut * 2 + 1))
                            : ring.backward[out_cut];
      ring.backward[out_cut] = fit_mps_message(sw, c, false, in, init, options);
    }
    ring.scalar = scalar_estimate();
    ring.laps = lap;
    if (lap >= 2) {
      const double denom = std::max(std::abs(ring.scalar), 1e-300);
      if (std::abs(ring.scalar - prev) <= options.ring_tol * denom) return ring;
    }
    prev = ring.scalar;
  }
  throw NonConvergenceError("ring message passing did not settle", {});
}

std::vector<Eigen::Matrix2cd> column_rdms(const CylinderSandwich& sw,
                                          const RingResult& ring, int column) {
  const int n_cols = sw.num_columns();
  const int lcut = (column - 1 + n_cols) % n_cols;
  const bool has_left = sw.ring() || column > 0;
  const bool has_right = sw.ring() || column + 1 < n_cols;
  const MpsMessage* left = has_left ? &ring.forward[lcut] : nullptr;
  const MpsMessage* right = has_right ? &ring.backward[column] : nullptr;
  ColumnPlan plan = column_plan(sw, column, has_left ? lcut : -1,
                                has_right ? column : -1);

  const int rows = sw.rows(column);
  std::vector<Tensor> tops(rows + 1), bottoms(rows + 1);
  tops[0] = Tensor(cplx(1.0));
  bottoms[rows] = Tensor(cplx(1.0));
  for (int r = rows - 1; r >= 0; --r)
    bottoms[r] = row_step(sw, column, r, bottoms[r + 1], left, plan.a_site[r], right,
                          plan.b_site[r]);
  for (int r = 0; r + 1 < rows; ++r)
    tops[r + 1] = row_step(sw, column, r, tops[r], left, plan.a_site[r], right,
                           plan.b_site[r]);

  std::vector<Eigen::Matrix2cd> rdms(rows);
  for (int r = 0; r < rows; ++r) {
    const Index& p = sw.phys(column, r);
    Index pk = p.sibling();
    std::vector<Tensor> ops{tops[r], sw.ket_with_phys(column, r, pk)};
    const auto& fs = sw.factors(column, r);
    for (std::size_t k = 1; k < fs.size(); ++k) ops.push_back(fs[k]);
    if (left && plan.a_site[r] >= 0) ops.push_back(left->sites[plan.a_site[r]]);
    if (right && plan.b_site[r] >= 0) ops.push_back(right->sites[plan.b_site[r]]);
    ops.push_back(bottoms[r + 1]);
    Tensor rdm_t = contract_network(std::move(ops));
    std::vector<Index> rr{pk}, cc{p};
    rdms[r] = to_matrix(rdm_t, rr, cc);
  }
  return rdms;
}

BmpsCorrelators bmps_all_correlators(const NetworkState& state,
                                     const BmpsOptions& options) {
  const auto& lat = state.lattice();
  if (lat.columns.empty())
    throw InvalidInputError("state lattice carries no column partition");
  const int l = lat.num_qubits;
  std::vector<Index> bra = make_bra_bonds(state);

  Eigen::Matrix2cd sz;
  sz << 1, 0, 0, -1;

  CylinderSandwich norm_sw(state, {}, lat.columns, lat.column_ring, &bra);
  RingResult norm_ring = ring_converge(norm_sw, options);

  BmpsCorrelators out;
  out.norm_scalar = norm_ring.scalar;
  out.singles.assign(l, 0.0);
  for (int c = 0; c < norm_sw.num_columns(); ++c) {
    auto rdms = column_rdms(norm_sw, norm_ring, c);
    for (int r = 0; r < norm_sw.rows(c); ++r) {
      const int q = lat.vertex_qubits[norm_sw.vertex(c, r)][0];
      cplx val = (rdms[r] * sz).trace() / rdms[r].trace();
      if (std::abs(val.imag()) > 1e-8)
        throw IllConditionedStateError("single-site value has imaginary part");
      out.singles[q] = val.real();
    }
  }

  out.raw = Eigen::MatrixXd::Zero(l, l);
  std::vector<std::string> errors(l);
  parallel_for(l, options.threads, [&](int i) {
    QubitOperators ops;
    ops[i] = sz;
    CylinderSandwich sw(state, ops, lat.columns, lat.column_ring, &bra);
    RingResult ring = ring_converge(sw, options, &norm_ring);
    const cplx ratio = ring.scalar / norm_ring.scalar;
    for (int c = 0; c < sw.num_columns(); ++c) {
      auto rdms = column_rdms(sw, ring, c);
      for (int r = 0; r < sw.rows(c); ++r) {
        const int q = lat.vertex_qubits[sw.vertex(c, r)][0];
        cplx val = ratio * (rdms[r] * sz).trace() / rdms[r].trace();
        if (std::abs(val.imag()) > 1e-8)
          throw IllConditionedStateError("correlator has imaginary part");
        out.raw(i, q) = val.real();
      }
    }
  });

  out.pairs = 0.5 * (out.raw + out.raw.transpose());
  for (int i = 0; i < l; ++i) out.pairs(i, i) = 1.0;  // sz^2 = identity
  return out;
}

NetworkState pad_trivial_bonds(const NetworkState& state,
                               const std::vector<std::pair<int, int>>& new_edges,
                               std::vector<std::vector<int>> columns, bool ring) {
  const TensorLattice& old_lat = state.lattice();
  TensorLattice lat = old_lat;
  std::vector<std::pair<int, int>> edges = old_lat.graph.edges;
  for (auto [u, v] : new_edges) edges.push_back(u < v ? std::make_pair(u, v)
                                                      : std::make_pair(v, u));
  lat.graph = make_graph(old_lat.graph.num_vertices, edges);
  lat.edge_terms.assign(lat.graph.edges.size(), {});
  for (int e = 0; e < old_lat.graph.num_edges(); ++e) {
    int ne = lat.graph.edge_index(old_lat.graph.edges[e].first,
                                  old_lat.graph.edges[e].second);
    lat.edge_terms[ne] = old_lat.edge_terms[e];
  }
  lat.columns = std::move(columns);
  lat.column_ring = ring;

  std::vector<Index> bonds(lat.graph.edges.size());
  std::vector<std::vector<Index>> phys(lat.graph.num_vertices);
  std::vector<Tensor> tensors;
  for (int v = 0; v < lat.graph.num_vertices; ++v) {
    tensors.push_back(state.tensor(v));
    for (std::size_t s = 0; s < lat.vertex_qubits[v].size(); ++s)
      phys[v].push_back(state.phys_index(v, static_cast<int>(s)));
  }
  for (int ne = 0; ne < lat.graph.num_edges(); ++ne) {
    const auto [u, v] = lat.graph.edges[ne];
    int old_e = old_lat.graph.edge_index(u, v);
    if (old_e >= 0) {
      bonds[ne] = state.bond_index(old_e);
    } else {
      bonds[ne] = Index::make(1, "pad:" + std::to_string(ne));
      Tensor stub({bonds[ne]}, {cplx(1.0)});
      tensors[u] = contract(tensors[u], stub);
      tensors[v] = contract(tensors[v], stub.replaced(bonds[ne], bonds[ne]));
    }
  }
  return NetworkState::adopt(std::move(lat), std::move(phys), std::move(bonds),
                             std::move(tensors));
}

}  // namespace glasstn
