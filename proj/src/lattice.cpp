#include "glasstn/lattice.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace glasstn {

std::string to_string(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::cylinder: return "cylinder";
    case LatticeKind::diamond_cubic: return "diamond_cubic";
    case LatticeKind::dimerized_cubic: return "dimerized_cubic";
    case LatticeKind::tree: return "tree";
    case LatticeKind::custom: return "custom";
  }
  return "?";
}

std::optional<LatticeKind> lattice_kind_from_string(const std::string& name) {
  if (name == "cylinder") return LatticeKind::cylinder;
  if (name == "diamond_cubic") return LatticeKind::diamond_cubic;
  if (name == "dimerized_cubic") return LatticeKind::dimerized_cubic;
  if (name == "tree") return LatticeKind::tree;
  if (name == "custom") return LatticeKind::custom;
  return std::nullopt;
}

int Graph::edge_index(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
  if (it != edges.end() && *it == std::make_pair(u, v))
    return static_cast<int>(it - edges.begin());
  return -1;
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(num_vertices);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

std::vector<std::vector<std::pair<int, int>>> Graph::incidence() const {
  std::vector<std::vector<std::pair<int, int>>> inc(num_vertices);
  for (int e = 0; e < num_edges(); ++e) {
    inc[edges[e].first].push_back({edges[e].second, e});
    inc[edges[e].second].push_back({edges[e].first, e});
  }
  return inc;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(num_vertices, 0);
  for (const auto& [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

int Graph::max_degree() const {
  int m = 0;
  for (int d : degrees()) m = std::max(m, d);
  return m;
}

Graph make_graph(int num_vertices, std::vector<std::pair<int, int>> edges) {
  std::set<std::pair<int, int>> dedup;
  for (auto [u, v] : edges) {
    if (u == v) throw InvalidSpecError("self-loop edge");
    if (u > v) std::swap(u, v);
    if (u < 0 || v >= num_vertices) throw InvalidSpecError("edge endpoint out of range");
    dedup.insert({u, v});
  }
  Graph g;
  g.num_vertices = num_vertices;
  g.edges.assign(dedup.begin(), dedup.end());
  return g;
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidSpecError(msg);
}

QubitLattice build_cylinder(const LatticeSpec& spec) {
  require(spec.dims.size() == 2, "cylinder expects dims [length, circumference]");
  const int length = spec.dims[0];
  const int circ = spec.dims[1];
  require(length >= 1, "cylinder length must be >= 1");
  require(circ >= 2, "periodic axis of length < 2 is unsupported");
  if (!spec.boundary.empty()) {
    require(spec.boundary.size() == 2, "cylinder expects two boundary entries");
    require(spec.boundary[0] == Boundary::open && spec.boundary[1] == Boundary::periodic,
            "cylinder has exactly one periodic axis (the second)");
  }
  // Vertex numbering is row-major over (axial, ring) with the periodic axis
  // innermost: id = a * circ + p.
  std::vector<std::pair<int, int>> edges;
  QubitLattice lat;
  lat.spec = spec;
  lat.coords.resize(static_cast<std::size_t>(length) * circ);
  for (int a = 0; a < length; ++a) {
    for (int p = 0; p < circ; ++p) {
      const int id = a * circ + p;
      lat.coords[id] = {a, p, 0, 0};
      edges.push_back({id, a * circ + (p + 1) % circ});
      if (a + 1 < length) edges.push_back({id, (a + 1) * circ + p});
    }
  }
  lat.graph = make_graph(length * circ, std::move(edges));
  return lat;
}

QubitLattice build_tree(const LatticeSpec& spec) {
  require(spec.dims.size() == 1, "tree expects dims [num_vertices]");
  const int n = spec.dims[0];
  require(n >= 1, "tree must have at least one vertex");
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.push_back({(i - 1) / 2, i});  // balanced binary
  QubitLattice lat;
  lat.spec = spec;
  lat.coords.assign(n, {0, 0, 0, 0});
  lat.graph = make_graph(n, std::move(edges));
  return lat;
}

QubitLattice build_diamond(const LatticeSpec& spec) {
  require(spec.dims.size() == 3, "diamond_cubic expects dims [Lx, Ly, Lz]");
  const int lx = spec.dims[0], ly = spec.dims[1], lz = spec.dims[2];
  require(lx >= 1 && ly >= 1, "diamond_cubic x/y extents must be >= 1");
  require(lz >= 2, "periodic axis of length < 2 is unsupported");
  // Two-site basis per cell; basis 1 in cell (x,y,z) bonds to basis 0 in
  // (x,y,z), (x+1,y,z), (x,y+1,z), (x,y,z+1); open x/y, periodic z.
  auto id = [&](int x, int y, int z, int b) {
    return (((x * ly) + y) * lz + z) * 2 + b;
  };
  std::vector<std::pair<int, int>> edges;
  QubitLattice lat;
  lat.spec = spec;
  lat.coords.resize(static_cast<std::size_t>(lx) * ly * lz * 2);
  for (int x = 0; x < lx; ++x)
    for (int y = 0; y < ly; ++y)
      for (int z = 0; z < lz; ++z) {
        lat.coords[id(x, y, z, 0)] = {x, y, z, 0};
        lat.coords[id(x, y, z, 1)] = {x, y, z, 1};
        const int b1 = id(x, y, z, 1);
        edges.push_back({b1, id(x, y, z, 0)});
        if (x + 1 < lx) edges.push_back({b1, id(x + 1, y, z, 0)});
        if (y + 1 < ly) edges.push_back({b1, id(x, y + 1, z, 0)});
        edges.push_back({b1, id(x, y, (z + 1) % lz, 0)});
      }
  lat.graph = make_graph(lx * ly * lz * 2, std::move(edges));
  return lat;
}

QubitLattice build_dimerized_cubic(const LatticeSpec& spec) {
  require(spec.dims.size() == 3, "dimerized_cubic expects dims [Lx, Ly, Lz]");
  const int lx = spec.dims[0], ly = spec.dims[1], lz = spec.dims[2];
  require(lx >= 1 && ly >= 1, "dimerized_cubic x/y extents must be >= 1");
  require(lz >= 2, "periodic axis of length < 2 is unsupported");
  // Two qubits (slots 0/1) per cubic site; inter-site couplings join matching
  // slots along x, y, and the periodic z direction.
  auto id = [&](int x, int y, int z, int s) {
    return (((x * ly) + y) * lz + z) * 2 + s;
  };
  std::vector<std::pair<int, int>> edges;
  QubitLattice lat;
  lat.spec = spec;
  lat.coords.resize(static_cast<std::size_t>(lx) * ly * lz * 2);
  for (int x = 0; x < lx; ++x)
    for (int y = 0; y < ly; ++y)
      for (int z = 0; z < lz; ++z) {
        lat.coords[id(x, y, z, 0)] = {x, y, z, 0};
        lat.coords[id(x, y, z, 1)] = {x, y, z, 1};
        lat.dimer_pairs.push_back({id(x, y, z, 0), id(x, y, z, 1)});
        edges.push_back({id(x, y, z, 0), id(x, y, z, 1)});
        for (int s = 0; s < 2; ++s) {
          if (x + 1 < lx) edges.push_back({id(x, y, z, s), id(x + 1, y, z, s)});
          if (y + 1 < ly) edges.push_back({id(x, y, z, s), id(x, y + 1, z, s)});
          edges.push_back({id(x, y, z, s), id(x, y, (z + 1) % lz, s)});
        }
      }
  lat.graph = make_graph(lx * ly * lz * 2, std::move(edges));
  return lat;
}

}  // namespace

QubitLattice build_lattice(const LatticeSpec& spec) {
  switch (spec.kind) {
    case LatticeKind::cylinder: return build_cylinder(spec);
    case LatticeKind::tree: return build_tree(spec);
    case LatticeKind::diamond_cubic: return build_diamond(spec);
    case LatticeKind::dimerized_cubic: return build_dimerized_cubic(spec);
    case LatticeKind::custom:
      throw InvalidSpecError(
          "custom lattices are loaded from edge-list files or built directly");
  }
  throw InvalidSpecError("unknown lattice kind");
}

QubitLattice make_custom_lattice(int num_qubits, std::vector<std::pair<int, int>> edges) {
  QubitLattice lat;
  lat.spec.kind = LatticeKind::custom;
  lat.spec.dims = {num_qubits};
  lat.graph = make_graph(num_qubits, std::move(edges));
  lat.coords.assign(num_qubits, {0, 0, 0, 0});
  return lat;
}

DisorderInstance sample_couplings(const QubitLattice& lattice, std::uint64_t seed) {
  if (lattice.graph.num_vertices == 0) throw InvalidInputError("empty lattice graph");
  std::mt19937_64 rng(seed);
  // Exact uniform over the 257 numerators in [-128, 128] by 9-bit rejection.
  auto draw = [&rng]() {
    for (;;) {
      std::uint64_t bits = rng();
      for (int k = 0; k < 7; ++k, bits >>= 9) {
        std::uint64_t x = bits & 0x1ff;
        if (x < 257) return static_cast<int>(x) - 128;
      }
    }
  };
  DisorderInstance inst;
  inst.lattice = lattice;
  inst.seed = seed;
  inst.numerators.resize(lattice.graph.edges.size());
  for (auto& a : inst.numerators) a = draw();
  return inst;
}

DisorderInstance load_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  std::map<std::pair<int, int>, int> numerators;
  int max_vertex = -1;
  std::string line;
  std::uint64_t seed = 0;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    std::string body = (hash == std::string::npos) ? line : line.substr(0, hash);
    if (hash != std::string::npos && line.find("# seed ") == 0) {
      seed = std::stoull(line.substr(7));
    }
    std::istringstream row(body);
    long long i, j, a;
    if (!(row >> i >> j >> a)) continue;
    if (i == j || i < 0 || j < 0) throw InvalidInputError("bad edge in edge list");
    if (a < -128 || a > 128)
      throw InvalidInputError("edge-list numerator outside [-128, 128]");
    std::pair<int, int> key{static_cast<int>(std::min(i, j)),
                            static_cast<int>(std::max(i, j))};
    if (numerators.count(key))
      throw InvalidInputError("duplicate edge in edge list");
    numerators[key] = static_cast<int>(a);
    edges.push_back(key);
    max_vertex = std::max(max_vertex, static_cast<int>(std::max(i, j)));
  }
  if (edges.empty()) throw InvalidInputError("edge list has no edges");
  DisorderInstance inst;
  inst.lattice = make_custom_lattice(max_vertex + 1, edges);
  inst.seed = seed;
  inst.numerators.reserve(inst.lattice.graph.edges.size());
  for (const auto& e : inst.lattice.graph.edges) inst.numerators.push_back(numerators[e]);
  return inst;
}

void save_edge_list(const DisorderInstance& instance, std::ostream& out) {
  out << "# kind " << to_string(instance.lattice.spec.kind);
  if (!instance.lattice.spec.dims.empty()) {
    out << " dims";
    for (int d : instance.lattice.spec.dims) out << ' ' << d;
  }
  out << '\n';
  out << "# seed " << instance.seed << '\n';
  out << "# rows: i j a   with J_ij = a/128\n";
  for (std::size_t e = 0; e < instance.lattice.graph.edges.size(); ++e) {
    const auto& [u, v] = instance.lattice.graph.edges[e];
    out << u << ' ' << v << ' ' << instance.numerators[e] << '\n';
  }
}

TensorLattice as_tensor_lattice(const DisorderInstance& instance) {
  TensorLattice tl;
  tl.graph = instance.lattice.graph;
  tl.num_qubits = instance.lattice.graph.num_vertices;
  tl.vertex_qubits.resize(tl.num_qubits);
  tl.vertex_terms.resize(tl.num_qubits);
  tl.qubit_location.resize(tl.num_qubits);
  for (int q = 0; q < tl.num_qubits; ++q) {
    tl.vertex_qubits[q] = {q};
    tl.qubit_location[q] = {q, 0};
  }
  tl.edge_terms.resize(tl.graph.edges.size());
  for (std::size_t e = 0; e < tl.graph.edges.size(); ++e) {
    const auto& [u, v] = tl.graph.edges[e];
    tl.edge_terms[e].push_back({u, v, 0, 0, instance.coupling(static_cast<int>(e))});
  }
  if (instance.lattice.spec.kind == LatticeKind::cylinder) {
    const int circ = instance.lattice.spec.dims[1];
    const int length = instance.lattice.spec.dims[0];
    tl.columns.assign(circ, {});
    for (int p = 0; p < circ; ++p)
      for (int a = 0; a < length; ++a) tl.columns[p].push_back(a * circ + p);
    tl.column_ring = true;
  }
  return tl;
}

TensorLattice group_dimers(const DisorderInstance& instance) {
  const auto& lat = instance.lattice;
  const int nq = lat.graph.num_vertices;
  std::vector<int> dimer_of(nq, -1);
  std::vector<int> slot_of(nq, -1);
  if (lat.dimer_pairs.empty())
    throw InvalidInputError("lattice has no dimer pairing");
  for (std::size_t d = 0; d < lat.dimer_pairs.size(); ++d) {
    auto [a, b] = lat.dimer_pairs[d];
    if (a < 0 || b < 0 || a >= nq || b >= nq || dimer_of[a] >= 0 || dimer_of[b] >= 0)
      throw InvalidInputError("dimer pairing is not a perfect matching");
    dimer_of[a] = static_cast<int>(d);
    slot_of[a] = 0;
    dimer_of[b] = static_cast<int>(d);
    slot_of[b] = 1;
  }
  for (int q = 0; q < nq; ++q)
    if (dimer_of[q] < 0) throw InvalidInputError("dimer pairing is not a perfect matching");

  const int nv = static_cast<int>(lat.dimer_pairs.size());
  TensorLattice tl;
  tl.num_qubits = nq;
  tl.vertex_qubits.resize(nv);
  tl.vertex_terms.resize(nv);
  tl.qubit_location.resize(nq);
  for (int d = 0; d < nv; ++d) {
    auto [a, b] = lat.dimer_pairs[d];
    tl.vertex_qubits[d] = {a, b};
    tl.qubit_location[a] = {d, 0};
    tl.qubit_location[b] = {d, 1};
  }

  std::vector<std::pair<int, int>> grouped_edges;
  for (const auto& [u, v] : lat.graph.edges) {
    if (dimer_of[u] != dimer_of[v]) grouped_edges.push_back({dimer_of[u], dimer_of[v]});
  }
  tl.graph = make_graph(nv, std::move(grouped_edges));
  tl.edge_terms.resize(tl.graph.edges.size());

  for (std::size_t e = 0; e < lat.graph.edges.size(); ++e) {
    const auto& [u, v] = lat.graph.edges[e];
    const double j = instance.coupling(static_cast<int>(e));
    if (dimer_of[u] == dimer_of[v]) {
      tl.vertex_terms[dimer_of[u]].push_back({u, v, j});
    } else {
      int ge = tl.graph.edge_index(dimer_of[u], dimer_of[v]);
      const auto& [gu, gv] = tl.graph.edges[ge];
      int qu = (dimer_of[u] == gu) ? u : v;
      int qw = (dimer_of[u] == gu) ? v : u;
      tl.edge_terms[ge].push_back({qu, qw, slot_of[qu], slot_of[qw], j});
    }
  }
  return tl;
}

}  // namespace glasstn
