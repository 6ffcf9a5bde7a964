#include "test_support.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace glasstn::tsupport {

cplx nested_loop_contract(const std::vector<Tensor>& tensors) {
  struct Leg {
    std::uint64_t id;
    int dim;
  };
  std::vector<Leg> legs;
  std::map<std::uint64_t, int> slot;
  for (const auto& t : tensors) {
    for (const auto& idx : t.indices()) {
      if (!slot.count(idx.id())) {
        slot[idx.id()] = static_cast<int>(legs.size());
        legs.push_back({idx.id(), idx.dim()});
      }
    }
  }
  std::vector<std::vector<int>> positions(tensors.size());
  for (std::size_t t = 0; t < tensors.size(); ++t)
    for (const auto& idx : tensors[t].indices())
      positions[t].push_back(slot[idx.id()]);

  std::vector<int> assign(legs.size(), 0);
  cplx total = 0.0;
  for (;;) {
    cplx prod = 1.0;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      std::vector<int> coords;
      coords.reserve(positions[t].size());
      for (int p : positions[t]) coords.push_back(assign[p]);
      prod *= tensors[t].at(std::span<const int>(coords));
    }
    total += prod;
    int k = static_cast<int>(legs.size()) - 1;
    for (; k >= 0; --k) {
      if (++assign[k] < legs[k].dim) break;
      assign[k] = 0;
    }
    if (k < 0) break;
  }
  return total;
}

Graph random_tree(int num_vertices, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < num_vertices; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    edges.push_back({pick(rng), v});
  }
  return make_graph(num_vertices, std::move(edges));
}

Graph random_loopy_graph(int max_edges, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> cycle_len(3, 5);
  std::vector<std::pair<int, int>> edges;
  int next = 0;
  auto add_cycle = [&](int len) {
    int start = next;
    for (int k = 0; k < len; ++k)
      edges.push_back({start + k, start + (k + 1) % len});
    next += len;
  };
  add_cycle(cycle_len(rng));
  // Optionally a second cycle, possibly bridged to the first.
  std::uniform_int_distribution<int> coin(0, 2);
  int extra = coin(rng);
  if (extra >= 1 && static_cast<int>(edges.size()) + 4 <= max_edges) {
    int len = 3;
    int first_size = next;
    add_cycle(len);
    if (extra == 2 && static_cast<int>(edges.size()) + 1 <= max_edges) {
      std::uniform_int_distribution<int> a(0, first_size - 1);
      std::uniform_int_distribution<int> b(first_size, next - 1);
      edges.push_back({a(rng), b(rng)});
    } else {
      // Merge a vertex of the second cycle onto the first so they touch.
      std::uniform_int_distribution<int> a(0, first_size - 1);
      int target = a(rng);
      for (auto& [u, v] : edges) {
        if (u == first_size) u = target;
        if (v == first_size) v = target;
      }
    }
  }
  // Pendant path if budget remains.
  while (static_cast<int>(edges.size()) < max_edges && coin(rng) == 0) {
    std::uniform_int_distribution<int> a(0, next - 1);
    edges.push_back({a(rng), next});
    ++next;
  }
  std::set<std::pair<int, int>> dedup;
  std::vector<std::pair<int, int>> cleaned;
  for (auto [u, v] : edges) {
    if (u == v) continue;
    auto key = std::minmax(u, v);
    if (dedup.insert(key).second) cleaned.push_back(key);
  }
  // Compress ids; merging may have left gaps.
  std::map<int, int> remap;
  for (auto [u, v] : cleaned) {
    remap.emplace(u, 0);
    remap.emplace(v, 0);
  }
  int n = 0;
  for (auto& [old_id, new_id] : remap) new_id = n++;
  for (auto& [u, v] : cleaned) {
    u = remap[u];
    v = remap[v];
  }
  return make_graph(n, std::move(cleaned));
}

std::vector<Tensor> random_closed_network(const Graph& graph, int dim,
                                          std::mt19937_64& rng) {
  std::vector<Index> bond;
  bond.reserve(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e)
    bond.push_back(Index::make(dim, "bond"));
  auto inc = graph.incidence();
  std::vector<Tensor> tensors;
  for (int v = 0; v < graph.num_vertices; ++v) {
    std::vector<Index> legs;
    for (const auto& [nbr, e] : inc[v]) legs.push_back(bond[e]);
    tensors.push_back(Tensor::random(legs, rng));
  }
  return tensors;
}

std::vector<Tensor> random_closed_network_mixed(const Graph& graph, int max_dim,
                                                std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, max_dim);
  std::vector<Index> bond;
  for (std::size_t e = 0; e < graph.edges.size(); ++e)
    bond.push_back(Index::make(d(rng), "bond"));
  auto inc = graph.incidence();
  std::vector<Tensor> tensors;
  for (int v = 0; v < graph.num_vertices; ++v) {
    std::vector<Index> legs;
    for (const auto& [nbr, e] : inc[v]) legs.push_back(bond[e]);
    tensors.push_back(Tensor::random(legs, rng));
  }
  return tensors;
}

}  // namespace glasstn::tsupport
