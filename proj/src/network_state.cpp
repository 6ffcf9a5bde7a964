#include "glasstn/network_state.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "glasstn/contraction.hpp"
#include "glasstn/hashing.hpp"

namespace glasstn {

NetworkState::NetworkState(TensorLattice lattice) : lattice_(std::move(lattice)) {
  const int nv = lattice_.graph.num_vertices;
  phys_.resize(nv);
  for (int v = 0; v < nv; ++v)
    for (int q : lattice_.vertex_qubits[v])
      phys_[v].push_back(Index::make(2, "site:" + std::to_string(q)));
  bonds_.reserve(lattice_.graph.edges.size());
  for (std::size_t e = 0; e < lattice_.graph.edges.size(); ++e)
    bonds_.push_back(Index::make(1, "bond:" + std::to_string(e)));
  tensors_.resize(nv);
}

NetworkState NetworkState::adopt(TensorLattice lattice,
                                 std::vector<std::vector<Index>> phys,
                                 std::vector<Index> bonds,
                                 std::vector<Tensor> tensors) {
  NetworkState state(std::move(lattice));
  if (static_cast<int>(phys.size()) != state.num_vertices() ||
      static_cast<int>(bonds.size()) != state.num_edges() ||
      static_cast<int>(tensors.size()) != state.num_vertices())
    throw InvalidInputError("adopt(): size mismatch");
  state.phys_ = std::move(phys);
  state.bonds_ = std::move(bonds);
  for (int v = 0; v < state.num_vertices(); ++v) state.set_tensor(v, std::move(tensors[v]));
  return state;
}

const Index& NetworkState::phys_index_of_qubit(int q) const {
  auto [v, slot] = lattice_.qubit_location[q];
  return phys_[v][slot];
}

int NetworkState::max_bond_dim() const {
  int m = 1;
  for (const auto& b : bonds_) m = std::max(m, b.dim());
  return m;
}

void NetworkState::set_tensor(int v, Tensor t) {
  for (const auto& p : phys_[v])
    if (!t.has_index(p)) throw InvalidInputError("tensor is missing a physical leg");
  tensors_[v] = std::move(t);
}

void NetworkState::set_bond(int e, Index bond, Tensor tu, Tensor tv) {
  if (!tu.has_index(bond) || !tv.has_index(bond))
    throw InvalidInputError("set_bond: endpoint tensors do not carry the new bond");
  const auto& [u, v] = lattice_.graph.edges[e];
  bonds_[e] = std::move(bond);
  set_tensor(u, std::move(tu));
  set_tensor(v, std::move(tv));
  if (vidal_) clear_bond_weights();
}

const std::vector<double>& NetworkState::bond_weights(int e) const {
  if (!vidal_) throw InvalidInputError("state carries no bond weights");
  return weights_[e];
}

void NetworkState::set_bond_weights(std::vector<std::vector<double>> weights) {
  if (static_cast<int>(weights.size()) != num_edges())
    throw InvalidInputError("bond weight count mismatch");
  for (int e = 0; e < num_edges(); ++e) {
    if (static_cast<int>(weights[e].size()) != bond_dim(e))
      throw InvalidInputError("bond weight length mismatch");
    for (std::size_t i = 0; i + 1 < weights[e].size(); ++i)
      if (weights[e][i] < weights[e][i + 1] - 1e-12)
        throw InvalidInputError("bond weights must be sorted descending");
  }
  weights_ = std::move(weights);
  vidal_ = true;
}

void NetworkState::clear_bond_weights() {
  weights_.clear();
  vidal_ = false;
}

std::uint64_t NetworkState::graph_hash() const {
  std::uint64_t h = fnv1a64_pod(lattice_.graph.num_vertices);
  for (const auto& [u, v] : lattice_.graph.edges) {
    h = fnv1a64_pod(u, h);
    h = fnv1a64_pod(v, h);
  }
  for (const auto& qs : lattice_.vertex_qubits)
    for (int q : qs) h = fnv1a64_pod(q, h);
  return h;
}

NetworkState product_state(const TensorLattice& lattice,
                           const std::vector<Eigen::Vector2cd>& qubit_amplitudes) {
  if (static_cast<int>(qubit_amplitudes.size()) != lattice.num_qubits)
    throw InvalidInputError("one amplitude pair per qubit required");
  for (const auto& a : qubit_amplitudes)
    if (std::abs(a.norm() - 1.0) > 1e-12)
      throw InvalidInputError("local amplitude is not normalized");

  NetworkState state(lattice);
  auto inc = lattice.graph.incidence();
  for (int v = 0; v < lattice.graph.num_vertices; ++v) {
    const auto& qs = lattice.vertex_qubits[v];
    std::vector<cplx> data;
    if (qs.size() == 1) {
      data = {qubit_amplitudes[qs[0]](0), qubit_amplitudes[qs[0]](1)};
    } else {
      data.resize(4);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          data[a * 2 + b] = qubit_amplitudes[qs[0]](a) * qubit_amplitudes[qs[1]](b);
    }
    std::vector<Index> legs;
    for (std::size_t s = 0; s < qs.size(); ++s)
      legs.push_back(state.phys_index(v, static_cast<int>(s)));
    std::vector<std::pair<int, int>> sorted_inc = inc[v];
    std::sort(sorted_inc.begin(), sorted_inc.end(),
              [](auto a, auto b) { return a.second < b.second; });
    for (const auto& [nbr, e] : sorted_inc) legs.push_back(state.bond_index(e));
    state.set_tensor(v, Tensor(legs, std::move(data)));
  }
  return state;
}

NetworkState uniform_product_state(const TensorLattice& lattice,
                                   const Eigen::Vector2cd& amplitude) {
  return product_state(lattice,
                       std::vector<Eigen::Vector2cd>(lattice.num_qubits, amplitude));
}

Eigen::Vector2cd minus_state() {
  Eigen::Vector2cd v;
  v << std::sqrt(0.5), -std::sqrt(0.5);
  return v;
}

Eigen::Vector2cd plus_state() {
  Eigen::Vector2cd v;
  v << std::sqrt(0.5), std::sqrt(0.5);
  return v;
}

void apply_one_site_gate(NetworkState& state, int vertex, const Eigen::MatrixXcd& gate) {
  const auto& qs = state.lattice().vertex_qubits[vertex];
  const int d = 1 << qs.size();
  if (gate.rows() != d || gate.cols() != d)
    throw InvalidInputError("gate dimension does not match the vertex");
  std::vector<Index> olds, news;
  for (std::size_t s = 0; s < qs.size(); ++s) {
    olds.push_back(state.phys_index(vertex, static_cast<int>(s)));
    news.push_back(olds.back().sibling());
  }
  Tensor g = from_matrix(gate, news, olds);
  Tensor out = contract(g, state.tensor(vertex));
  for (std::size_t s = 0; s < qs.size(); ++s) out = out.replaced(news[s], olds[s]);
  state.set_tensor(vertex, std::move(out));
}

void apply_one_site_gate_on_qubit(NetworkState& state, int qubit,
                                  const Eigen::MatrixXcd& gate) {
  auto [v, slot] = state.lattice().qubit_location[qubit];
  const auto& qs = state.lattice().vertex_qubits[v];
  if (qs.size() == 1) {
    apply_one_site_gate(state, v, gate);
    return;
  }
  if (gate.rows() != 2) throw InvalidInputError("per-qubit gate must be 2x2");
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  Eigen::MatrixXcd big(4, 4);
  const Eigen::MatrixXcd& a = (slot == 0) ? gate : id;
  const Eigen::MatrixXcd& b = (slot == 0) ? id : gate;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) big.block(i * 2, j * 2, 2, 2) = a(i, j) * b;
  apply_one_site_gate(state, v, big);
}

StateVector to_statevector(const NetworkState& state, double budget) {
  const int l = state.num_qubits();
  if (l > StateVector::kMaxQubits)
    throw SizeCapError("network too large for dense conversion");
  std::vector<Tensor> tensors;
  for (int v = 0; v < state.num_vertices(); ++v) tensors.push_back(state.tensor(v));
  ContractionOptions opts;
  opts.cost_budget = budget;
  Tensor full = contract_network(std::move(tensors), opts);
  std::vector<Index> order;
  for (int q = l - 1; q >= 0; --q) order.push_back(state.phys_index_of_qubit(q));
  Tensor arranged = full.permuted(order);
  return StateVector::from_amplitudes(l, arranged.data());
}

namespace {
constexpr std::uint32_t kStateMagic = 0x534e5447;  // "GTNS"
constexpr std::uint32_t kStateVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated state checkpoint");
  return v;
}
}  // namespace

void NetworkState::save(std::ostream& out) const {
  put(out, kStateMagic);
  put(out, kStateVersion);
  put(out, graph_hash());
  put(out, static_cast<std::uint8_t>(vidal_ ? 1 : 0));
  put(out, static_cast<std::uint32_t>(num_vertices()));
  put(out, static_cast<std::uint32_t>(num_edges()));
  for (int e = 0; e < num_edges(); ++e) {
    put(out, static_cast<std::uint32_t>(lattice_.graph.edges[e].first));
    put(out, static_cast<std::uint32_t>(lattice_.graph.edges[e].second));
    put(out, static_cast<std::uint32_t>(bond_dim(e)));
  }
  auto inc = lattice_.graph.incidence();
  for (int v = 0; v < num_vertices(); ++v) {
    // Canonical leg order: physical slots then bonds by edge id.
    std::vector<Index> order = phys_[v];
    std::vector<std::pair<int, int>> sorted_inc = inc[v];
    std::sort(sorted_inc.begin(), sorted_inc.end(),
              [](auto a, auto b) { return a.second < b.second; });
    for (const auto& [nbr, e] : sorted_inc) order.push_back(bonds_[e]);
    tensors_[v].permuted(order).write(out);
  }
  if (vidal_) {
    for (int e = 0; e < num_edges(); ++e) {
      put(out, static_cast<std::uint32_t>(weights_[e].size()));
      for (double w : weights_[e]) put(out, w);
    }
  }
}

NetworkState NetworkState::load(std::istream& in, TensorLattice lattice) {
  if (get<std::uint32_t>(in) != kStateMagic) throw IoError("bad checkpoint magic");
  if (get<std::uint32_t>(in) != kStateVersion)
    throw IoError("unsupported checkpoint version");
  NetworkState state(std::move(lattice));
  if (get<std::uint64_t>(in) != state.graph_hash())
    throw IoError("checkpoint graph hash does not match the lattice");
  const bool vidal = get<std::uint8_t>(in) != 0;
  const auto nv = get<std::uint32_t>(in);
  const auto ne = get<std::uint32_t>(in);
  if (static_cast<int>(nv) != state.num_vertices() ||
      static_cast<int>(ne) != state.num_edges())
    throw IoError("checkpoint size mismatch");
  for (std::uint32_t e = 0; e < ne; ++e) {
    const auto u = get<std::uint32_t>(in);
    const auto v = get<std::uint32_t>(in);
    const auto dim = get<std::uint32_t>(in);
    if (std::make_pair(static_cast<int>(u), static_cast<int>(v)) !=
        state.lattice_.graph.edges[e])
      throw IoError("checkpoint edge mismatch");
    state.bonds_[e] = Index::make(static_cast<int>(dim), "bond:" + std::to_string(e));
  }
  auto inc = state.lattice_.graph.incidence();
  for (std::uint32_t v = 0; v < nv; ++v) {
    Tensor raw = Tensor::read(in);
    std::vector<Index> order = state.phys_[v];
    std::vector<std::pair<int, int>> sorted_inc = inc[v];
    std::sort(sorted_inc.begin(), sorted_inc.end(),
              [](auto a, auto b) { return a.second < b.second; });
    for (const auto& [nbr, e] : sorted_inc) order.push_back(state.bonds_[e]);
    if (raw.rank() != static_cast<int>(order.size()))
      throw IoError("checkpoint tensor rank mismatch");
    for (int k = 0; k < raw.rank(); ++k) {
      if (raw.indices()[k].dim() != order[k].dim())
        throw IoError("checkpoint tensor extent mismatch");
      raw = raw.replaced(raw.indices()[k], order[k]);
    }
    state.tensors_[v] = std::move(raw);
  }
  if (vidal) {
    std::vector<std::vector<double>> weights(ne);
    for (std::uint32_t e = 0; e < ne; ++e) {
      const auto n = get<std::uint32_t>(in);
      weights[e].resize(n);
      for (auto& w : weights[e]) w = get<double>(in);
    }
    state.set_bond_weights(std::move(weights));
  }
  return state;
}

}  // namespace glasstn
