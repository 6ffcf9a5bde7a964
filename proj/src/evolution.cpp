#include "glasstn/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "glasstn/contraction.hpp"

namespace glasstn {

Schedule Schedule::builtin() {
  const double w = 2.0 * std::numbers::pi;
  return from_samples({{0.0, 0.0, w}, {1.0, w, 0.0}}, Interp::linear);
}

Schedule Schedule::from_samples(std::vector<std::array<double, 3>> samples,
                                Interp interp) {
  Schedule sched;
  sched.samples_ = std::move(samples);
  sched.interp_ = interp;
  sched.validate_and_build();
  return sched;
}

Schedule Schedule::from_csv(std::istream& in, Interp interp) {
  std::vector<std::array<double, 3>> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (auto& c : line)
      if (c == ',') c = ' ';
    std::istringstream row(line);
    double s, g, j;
    if (!(row >> s >> g >> j)) {
      // Allow a header row.
      if (samples.empty()) continue;
      throw InvalidInputError("bad schedule row: " + line);
    }
    samples.push_back({s, g, j});
  }
  return from_samples(std::move(samples), interp);
}

void Schedule::validate_and_build() {
  if (samples_.size() < 2)
    throw InvalidInputError("schedule needs at least two samples");
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i)
    if (samples_[i + 1][0] <= samples_[i][0])
      throw InvalidInputError("schedule s values must be strictly increasing");
  if (std::abs(samples_.front()[0]) > 1e-12 || std::abs(samples_.back()[0] - 1.0) > 1e-12)
    throw InvalidInputError("schedule must span s = 0 to s = 1");
  if (interp_ == Interp::cubic) {
    // Natural cubic spline second derivatives, one tridiagonal solve per column.
    const int n = static_cast<int>(samples_.size());
    second_derivs_.assign(n, {0.0, 0.0});
    for (int col = 0; col < 2; ++col) {
      std::vector<double> a(n, 0.0), b(n, 2.0), c(n, 0.0), d(n, 0.0);
      for (int i = 1; i + 1 < n; ++i) {
        double h0 = samples_[i][0] - samples_[i - 1][0];
        double h1 = samples_[i + 1][0] - samples_[i][0];
        a[i] = h0 / (h0 + h1);
        c[i] = h1 / (h0 + h1);
        d[i] = 6.0 / (h0 + h1) *
               ((samples_[i + 1][col + 1] - samples_[i][col + 1]) / h1 -
                (samples_[i][col + 1] - samples_[i - 1][col + 1]) / h0);
      }
      for (int i = 1; i < n; ++i) {
        double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
      }
      std::vector<double> m(n, 0.0);
      m[n - 1] = d[n - 1] / b[n - 1];
      for (int i = n - 2; i >= 0; --i) m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
      for (int i = 0; i < n; ++i) second_derivs_[i][col] = m[i];
    }
  }
}

double Schedule::eval(double s, int column) const {
  s = std::clamp(s, 0.0, 1.0);
  std::size_t hi = 1;
  while (hi + 1 < samples_.size() && samples_[hi][0] < s) ++hi;
  const auto& p0 = samples_[hi - 1];
  const auto& p1 = samples_[hi];
  const double h = p1[0] - p0[0];
  const double t = (s - p0[0]) / h;
  if (interp_ == Interp::linear)
    return (1.0 - t) * p0[column + 1] + t * p1[column + 1];
  const double m0 = second_derivs_[hi - 1][column];
  const double m1 = second_derivs_[hi][column];
  const double u = 1.0 - t;
  return u * p0[column + 1] + t * p1[column + 1] +
         h * h / 6.0 * ((u * u * u - u) * m0 + (t * t * t - t) * m1);
}

double Schedule::gamma(double s) const { return eval(s, 0); }
double Schedule::jx(double s) const { return eval(s, 1); }

bool Schedule::prep_warning() const { return jx(0.0) < 10.0 * gamma(0.0); }

namespace {

// exp(c * sx) and exp(c * sz x sz) in closed form; valid for complex c.
Eigen::Matrix2cd exp_x(cplx c) {
  Eigen::Matrix2cd m;
  m << std::cosh(c), std::sinh(c), std::sinh(c), std::cosh(c);
  return m;
}

Eigen::MatrixXcd kron2(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double z_of_bit(int basis, int bit_from_left, int width) {
  return ((basis >> (width - 1 - bit_from_left)) & 1) ? -1.0 : 1.0;
}

// Shared construction of one symmetric splitting layer. The zz angle factor
// multiplies every coupling; the x half-angle factor multiplies jx.
std::vector<Gate> build_layer(const TensorLattice& lattice, double gamma_coef,
                              double jx_coef, cplx step) {
  std::vector<Gate> layer;
  const int nv = lattice.graph.num_vertices;

  auto vertex_x_gate = [&](int v) {
    Gate g;
    g.kind = Gate::Kind::vertex;
    g.target = v;
    g.qubits = lattice.vertex_qubits[v];
    Eigen::Matrix2cd rx = exp_x(step * 0.5 * jx_coef);
    Eigen::MatrixXcd m = rx;
    for (std::size_t s = 1; s < lattice.vertex_qubits[v].size(); ++s) m = kron2(m, rx);
    g.matrix = m;
    return g;
  };

  for (int v = 0; v < nv; ++v) layer.push_back(vertex_x_gate(v));

  // On-vertex zz terms (grouped dimers) in vertex order.
  for (int v = 0; v < nv; ++v) {
    for (const auto& term : lattice.vertex_terms[v]) {
      Gate g;
      g.kind = Gate::Kind::vertex;
      g.target = v;
      g.qubits = lattice.vertex_qubits[v];
      const int width = static_cast<int>(g.qubits.size());
      const int dim = 1 << width;
      int slot_a = 0, slot_b = 1;  // dimer intra term spans both slots
      g.diagonal = true;
      g.diag.resize(dim);
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
      for (int b = 0; b < dim; ++b) {
        cplx phase = std::exp(step * gamma_coef * term.coupling *
                              z_of_bit(b, slot_a, width) * z_of_bit(b, slot_b, width));
        g.diag[b] = phase;
        m(b, b) = phase;
      }
      g.matrix = m;
      layer.push_back(std::move(g));
    }
  }

  // Two-site zz gates in edge (lexicographic) order.
  for (int e = 0; e < lattice.graph.num_edges(); ++e) {
    const auto& terms = lattice.edge_terms[e];
    if (terms.empty()) continue;
    const auto [u, v] = lattice.graph.edges[e];
    Gate g;
    g.kind = Gate::Kind::edge;
    g.target = e;
    g.qubits = lattice.vertex_qubits[u];
    g.qubits.insert(g.qubits.end(), lattice.vertex_qubits[v].begin(),
                    lattice.vertex_qubits[v].end());
    const int wu = static_cast<int>(lattice.vertex_qubits[u].size());
    const int width = static_cast<int>(g.qubits.size());
    const int dim = 1 << width;
    g.diagonal = true;
    g.diag.resize(dim);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (int b = 0; b < dim; ++b) {
      cplx arg = 0.0;
      for (const auto& term : terms)
        arg += step * gamma_coef * term.coupling *
               z_of_bit(b, term.slot_u, width) * z_of_bit(b, wu + term.slot_w, width);
      cplx phase = std::exp(arg);
      g.diag[b] = phase;
      m(b, b) = phase;
    }
    g.matrix = m;
    layer.push_back(std::move(g));
  }

  for (int v = 0; v < nv; ++v) layer.push_back(vertex_x_gate(v));
  return layer;
}

}  // namespace

std::vector<Gate> trotter_layer(const TensorLattice& lattice, const Schedule& schedule,
                                double s, double dt) {
  return build_layer(lattice, schedule.gamma(s), schedule.jx(s), cplx(0.0, -dt));
}

std::vector<Gate> imaginary_layer(const TensorLattice& lattice, double gamma0,
                                  double jx0, double dtau) {
  return build_layer(lattice, gamma0, jx0, cplx(-dtau, 0.0));
}

EvolveStats evolve(NetworkState& state, NormMessages& messages,
                   const Schedule& schedule, const EvolutionParams& params) {
  if (params.dt <= 0 || params.t_a < params.dt)
    throw InvalidInputError("require 0 < dt <= t_a");
  if (params.chi > params.chi_bp)
    throw InvalidInputError("require chi <= chi_bp");

  EvolveStats stats;
  BpOptions bp;
  bp.tol = params.bp_tol;
  bp.max_sweeps = params.max_sweeps;
  GateOptions gate_opts;
  gate_opts.cutoff = params.cutoff;
  gate_opts.stale_tol = params.bp_tol * 10.0;

  auto checkpoint = [&](const NetworkState& s) {
    if (params.checkpoint_path.empty()) return;
    std::ofstream out(params.checkpoint_path, std::ios::binary);
    s.save(out);
  };

  for (int step = 0;; ++step) {
    const double t = step * params.dt;
    const double dt_k = std::min(params.dt, params.t_a - t);
    if (dt_k <= 1e-12) break;
    const double s_mid = (t + 0.5 * dt_k) / params.t_a;

    try {
      BpReport rep = messages.converge(state, bp);
      stats.bp_sweeps += rep.sweeps;
    } catch (const NonConvergenceError&) {
      checkpoint(state);
      throw;
    }

    for (const Gate& g : trotter_layer(state.lattice(), schedule, s_mid, dt_k)) {
      if (g.kind == Gate::Kind::vertex) {
        apply_one_site_gate(state, g.target, g.matrix);
      } else {
        TruncationReport rep = apply_two_site_gate_bp(state, g.target, g.matrix,
                                                      messages, params.chi_bp, gate_opts);
        stats.cumulative_truncation += rep.discarded_weight;
      }
    }
    stats.max_bond_dim = std::max(stats.max_bond_dim, state.max_bond_dim());
    stats.steps += 1;
    if (params.progress) {
      (*params.progress) << "step=" << stats.steps << " s=" << s_mid
                         << " max_chi=" << state.max_bond_dim()
                         << " cum_trunc=" << stats.cumulative_truncation
                         << " bp_sweeps=" << stats.bp_sweeps << '\n';
    }
    if (params.checkpoint_every > 0 && (step + 1) % params.checkpoint_every == 0)
      checkpoint(state);
  }
  return stats;
}

std::vector<double> bp_site_expectations(const NetworkState& state,
                                         const NormMessages& messages,
                                         const Eigen::Matrix2cd& op) {
  const auto& lat = state.lattice();
  auto inc = lat.graph.incidence();
  std::vector<double> out(lat.num_qubits, 0.0);
  for (int v = 0; v < lat.graph.num_vertices; ++v) {
    std::vector<Index> unprimed, primed;
    for (std::size_t s = 0; s < lat.vertex_qubits[v].size(); ++s) {
      unprimed.push_back(state.phys_index(v, static_cast<int>(s)));
      primed.push_back(unprimed.back().sibling());
    }
    Tensor bra = state.tensor(v).conj();
    for (std::size_t s = 0; s < unprimed.size(); ++s)
      bra = bra.replaced(unprimed[s], primed[s]);
    for (const auto& [nbr, e] : inc[v])
      bra = bra.replaced(state.bond_index(e), messages.bra_index(e));
    std::vector<Tensor> operands{state.tensor(v), bra};
    for (const auto& [nbr, e] : inc[v]) operands.push_back(messages.message(nbr, v));
    Tensor rdm_t = contract_network(std::move(operands));
    Eigen::MatrixXcd rdm = to_matrix(rdm_t, unprimed, primed);
    const double trace = rdm.real().trace();
    for (std::size_t s = 0; s < lat.vertex_qubits[v].size(); ++s) {
      Eigen::MatrixXcd big = Eigen::MatrixXcd::Identity(1, 1);
      for (std::size_t k = 0; k < lat.vertex_qubits[v].size(); ++k)
        big = kron2(big, k == s ? Eigen::MatrixXcd(op)
                                : Eigen::MatrixXcd(Eigen::Matrix2cd::Identity()));
      out[lat.vertex_qubits[v][s]] = (rdm * big).trace().real() / trace;
    }
  }
  return out;
}

PrepResult prepare_ground_state(const TensorLattice& lattice, const Schedule& schedule,
                                const PrepParams& params) {
  const double gamma0 = schedule.gamma(0.0);
  const double jx0 = schedule.jx(0.0);
  NetworkState state =
      uniform_product_state(lattice, jx0 >= 0.0 ? minus_state() : plus_state());
  NormMessages messages(state);

  BpOptions bp;
  bp.tol = params.bp_tol;
  bp.max_sweeps = params.max_sweeps;
  GateOptions gate_opts;
  gate_opts.stale_tol = params.bp_tol * 10.0;

  const double scale = std::max(std::abs(jx0), std::abs(gamma0));
  if (scale == 0.0) throw InvalidInputError("H(0) vanishes; nothing to prepare");
  double dtau = params.dtau_scale / scale;
  int halvings = 0;

  Eigen::Matrix2cd sx, sz;
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;

  std::vector<double> prev_x, prev_z;
  for (int step = 0; step < params.max_steps; ++step) {
    messages.converge(state, bp);
    for (const Gate& g : imaginary_layer(lattice, gamma0, jx0, dtau)) {
      if (g.kind == Gate::Kind::vertex) {
        apply_one_site_gate(state, g.target, g.matrix);
        double n = state.tensor(g.target).norm();
        if (n <= 0.0) throw IllConditionedStateError("vanishing tensor in prep");
        state.set_tensor(g.target, state.tensor(g.target).scaled(1.0 / n));
      } else {
        apply_two_site_gate_bp(state, g.target, g.matrix, messages, params.chi_bp,
                               gate_opts);
      }
    }
    messages.converge(state, bp);
    std::vector<double> x = bp_site_expectations(state, messages, sx);
    std::vector<double> z = bp_site_expectations(state, messages, sz);
    double delta = 0.0;
    if (!prev_x.empty()) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        delta = std::max(delta, std::abs(x[i] - prev_x[i]));
        delta = std::max(delta, std::abs(z[i] - prev_z[i]));
      }
      if (delta < params.tol) {
        if (halvings >= 2) {
          normalize_bp(state, messages);
          messages.converge(state, bp);
          return PrepResult{std::move(state), std::move(messages), step + 1};
        }
        dtau *= 0.5;
        ++halvings;
      }
    }
    prev_x = std::move(x);
    prev_z = std::move(z);
  }
  throw NonConvergenceError("ground-state preparation exhausted its step budget", {});
}

void apply_layer(StateVector& v, const std::vector<Gate>& layer) {
  for (const Gate& g : layer) {
    if (g.diagonal)
      v.apply_diagonal(g.qubits, g.diag);
    else
      v.apply_gate(g.qubits, g.matrix);
  }
}

StateVector exact_evolve(const TensorLattice& lattice, const Schedule& schedule,
                         const EvolutionParams& params, StepMode mode,
                         const StateVector* initial) {
  const int l = lattice.num_qubits;
  StateVector v(1);
  if (initial) {
    if (initial->num_qubits() != l)
      throw InvalidInputError("initial statevector size mismatch");
    v = *initial;
  } else if (schedule.gamma(0.0) == 0.0) {
    // Transverse-field-only start: exact product ground state.
    std::vector<cplx> amp(std::size_t{1} << l);
    const double scale = std::pow(2.0, -0.5 * l);
    const double sign = schedule.jx(0.0) >= 0.0 ? -1.0 : 1.0;
    for (std::size_t n = 0; n < amp.size(); ++n)
      amp[n] = scale * std::pow(sign, std::popcount(n));
    v = StateVector::from_amplitudes(l, std::move(amp));
  } else {
    if (l > 14)
      throw SizeCapError("dense ground-state start capped at 14 qubits");
    DisorderInstance inst;
    inst.lattice = make_custom_lattice(l, {});
    std::vector<std::pair<int, int>> qedges;
    std::vector<int> nums;
    for (int e = 0; e < lattice.graph.num_edges(); ++e)
      for (const auto& t : lattice.edge_terms[e]) {
        qedges.push_back({std::min(t.qubit_u, t.qubit_w), std::max(t.qubit_u, t.qubit_w)});
        nums.push_back(static_cast<int>(std::lround(t.coupling * 128.0)));
      }
    for (const auto& terms : lattice.vertex_terms)
      for (const auto& t : terms) {
        qedges.push_back({std::min(t.qubit_a, t.qubit_b), std::max(t.qubit_a, t.qubit_b)});
        nums.push_back(static_cast<int>(std::lround(t.coupling * 128.0)));
      }
    inst.lattice = make_custom_lattice(l, qedges);
    inst.numerators.assign(inst.lattice.graph.edges.size(), 0);
    for (std::size_t k = 0; k < qedges.size(); ++k) {
      int e = inst.lattice.graph.edge_index(qedges[k].first, qedges[k].second);
      inst.numerators[e] = nums[k];
    }
    v = dense_ground_state(inst, schedule.gamma(0.0), schedule.jx(0.0));
  }

  std::map<double, Eigen::MatrixXcd> propagator_cache;
  for (int step = 0;; ++step) {
    const double t = step * params.dt;
    const double dt_k = std::min(params.dt, params.t_a - t);
    if (dt_k <= 1e-12) break;
    const double s_mid = (t + 0.5 * dt_k) / params.t_a;
    if (mode == StepMode::trotter) {
      apply_layer(v, trotter_layer(lattice, schedule, s_mid, dt_k));
    } else {
      if (l > 12) throw SizeCapError("exact-step propagation capped at 12 qubits");
      auto it = propagator_cache.find(s_mid);
      if (it == propagator_cache.end()) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(std::int64_t{1} << l,
                                                    std::int64_t{1} << l);
        const double g = schedule.gamma(s_mid), jx = schedule.jx(s_mid);
        for (std::int64_t n = 0; n < h.rows(); ++n) {
          double zz = 0.0;
          auto zval = [&](int q) { return ((n >> q) & 1) ? -1.0 : 1.0; };
          for (int e = 0; e < lattice.graph.num_edges(); ++e)
            for (const auto& term : lattice.edge_terms[e])
              zz += term.coupling * zval(term.qubit_u) * zval(term.qubit_w);
          for (const auto& terms : lattice.vertex_terms)
            for (const auto& term : terms)
              zz += term.coupling * zval(term.qubit_a) * zval(term.qubit_b);
          h(n, n) += g * zz;
          for (int q = 0; q < l; ++q) h(n ^ (std::int64_t{1} << q), n) += jx;
        }
        it = propagator_cache.emplace(s_mid, hermitian_propagator(h, dt_k)).first;
      }
      Eigen::Map<Eigen::VectorXcd> amp(v.amplitudes().data(),
                                       static_cast<Eigen::Index>(v.amplitudes().size()));
      Eigen::VectorXcd next = it->second * amp;
      amp = next;
    }
  }
  return v;
}

}  // namespace glasstn
