#include "glasstn/lattice.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <cmath>
#include <sstream>

using namespace glasstn;

namespace {

// Independent neighborhood oracle for the cylinder: enumerate neighbor sets
// straight from coordinates.
std::set<std::pair<int, int>> cylinder_edges_oracle(int length, int circ) {
  std::set<std::pair<int, int>> edges;
  auto id = [&](int a, int p) { return a * circ + ((p % circ) + circ) % circ; };
  for (int a = 0; a < length; ++a)
    for (int p = 0; p < circ; ++p) {
      int u = id(a, p);
      for (auto [da, dp] : {std::pair{0, 1}, {0, -1}, {1, 0}, {-1, 0}}) {
        int aa = a + da;
        if (aa < 0 || aa >= length) continue;
        int v = id(aa, p + dp);
        if (u != v) edges.insert(std::minmax(u, v));
      }
    }
  return edges;
}

bool graphs_isomorphic_brute(const Graph& a, const Graph& b) {
  if (a.num_vertices != b.num_vertices || a.edges.size() != b.edges.size())
    return false;
  std::vector<int> perm(a.num_vertices);
  std::iota(perm.begin(), perm.end(), 0);
  std::set<std::pair<int, int>> eb(b.edges.begin(), b.edges.end());
  do {
    bool ok = true;
    for (const auto& [u, v] : a.edges) {
      auto key = std::minmax(perm[u], perm[v]);
      if (!eb.count({key.first, key.second})) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

}  // namespace

TEST(Lattice, Cylinder3x3Counts) {
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {3, 3}, {}});
  EXPECT_EQ(lat.graph.num_vertices, 9);
  EXPECT_EQ(lat.graph.num_edges(), 15);  // 3 rings of 3 plus 2x3 axial
  EXPECT_LE(lat.graph.max_degree(), 4);
}

TEST(Lattice, CylinderMatchesNeighborhoodOracle) {
  for (int length = 2; length <= 4; ++length)
    for (int circ = 2; circ <= 4; ++circ) {
      QubitLattice lat = build_lattice({LatticeKind::cylinder, {length, circ}, {}});
      auto oracle = cylinder_edges_oracle(length, circ);
      std::set<std::pair<int, int>> got(lat.graph.edges.begin(), lat.graph.edges.end());
      EXPECT_EQ(got, oracle) << "cylinder " << length << "x" << circ;
    }
}

TEST(Lattice, MinimalTree) {
  QubitLattice lat = build_lattice({LatticeKind::tree, {2}, {}});
  EXPECT_EQ(lat.graph.num_vertices, 2);
  EXPECT_EQ(lat.graph.num_edges(), 1);
  // A tree: |V| - 1 edges and connected means no cycles.
  QubitLattice big = build_lattice({LatticeKind::tree, {10}, {}});
  EXPECT_EQ(big.graph.num_edges(), 9);
}

TEST(Lattice, PeriodicAxisOfLengthOneRejected) {
  EXPECT_THROW(build_lattice({LatticeKind::cylinder, {3, 1}, {}}), InvalidSpecError);
  EXPECT_THROW(build_lattice({LatticeKind::diamond_cubic, {2, 2, 1}, {}}),
               InvalidSpecError);
}

TEST(Lattice, DiamondCoordinationAtMostFour) {
  QubitLattice lat = build_lattice({LatticeKind::diamond_cubic, {2, 2, 3}, {}});
  EXPECT_EQ(lat.graph.num_vertices, 24);
  EXPECT_LE(lat.graph.max_degree(), 4);
  // z-periodic: every basis-1 site keeps its 4th bond through the wrap.
  auto degs = lat.graph.degrees();
  int four = static_cast<int>(std::count(degs.begin(), degs.end(), 4));
  EXPECT_GT(four, 0);
}

TEST(Lattice, DimerizedCubicHasThreeCycleThroughPeriodicZ) {
  QubitLattice lat = build_lattice({LatticeKind::dimerized_cubic, {3, 3, 3}, {}});
  EXPECT_EQ(lat.graph.num_vertices, 54);
  // Slot-0 qubits of one z-column form a triangle via the periodic wrap.
  auto id = [&](int z) { return ((0 * 3 + 0) * 3 + z) * 2 + 0; };
  EXPECT_GE(lat.graph.edge_index(id(0), id(1)), 0);
  EXPECT_GE(lat.graph.edge_index(id(1), id(2)), 0);
  EXPECT_GE(lat.graph.edge_index(id(2), id(0)), 0);
}

TEST(Lattice, SampleCouplingsAreBinaryFractions) {
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {4, 4}, {}});
  DisorderInstance inst = sample_couplings(lat, 123);
  for (std::size_t e = 0; e < lat.graph.edges.size(); ++e) {
    double scaled = inst.coupling(static_cast<int>(e)) * 128.0;
    EXPECT_EQ(scaled, std::round(scaled));
    EXPECT_GE(inst.numerators[e], -128);
    EXPECT_LE(inst.numerators[e], 128);
  }
}

TEST(Lattice, SamplingDeterministicInSeed) {
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {4, 4}, {}});
  DisorderInstance a = sample_couplings(lat, 99);
  DisorderInstance b = sample_couplings(lat, 99);
  EXPECT_EQ(a.numerators, b.numerators);
  DisorderInstance c = sample_couplings(lat, 100);
  EXPECT_NE(a.numerators, c.numerators);
}

TEST(Lattice, SamplingMeanAndRange) {
  // 10^5 couplings: uniform over {-128..128}/128 has variance m(m+1)/3/128^2,
  // so the mean of N draws stays within 3 sigma of 0.
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {100, 10}, {}});
  double sum = 0.0;
  std::size_t n = 0;
  double max_abs = 0.0;
  for (std::uint64_t seed = 0; sum == 0.0 || n < 100000; ++seed) {
    DisorderInstance inst = sample_couplings(lat, seed);
    for (std::size_t e = 0; e < inst.numerators.size(); ++e) {
      sum += inst.coupling(static_cast<int>(e));
      max_abs = std::max(max_abs, std::abs(inst.coupling(static_cast<int>(e))));
      ++n;
    }
  }
  double sigma_mean = std::sqrt(128.0 * 129.0 / 3.0) / 128.0 / std::sqrt(double(n));
  EXPECT_LT(std::abs(sum / double(n)), 3.0 * sigma_mean);
  EXPECT_LE(max_abs, 1.0);
}

TEST(Lattice, CouplingSignSymmetry) {
  // Chi-squared test over the 128 (+a, -a) bucket pairs; statistic is
  // chi^2_128 under the symmetric law. 0.99 quantile of chi^2_128 = 168.133.
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {100, 10}, {}});
  std::vector<long> pos(129, 0), neg(129, 0);
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
    DisorderInstance inst = sample_couplings(lat, seed);
    for (int a : inst.numerators) {
      if (a > 0) ++pos[a];
      else if (a < 0) ++neg[-a];
    }
  }
  double stat = 0.0;
  for (int a = 1; a <= 128; ++a) {
    double tot = double(pos[a] + neg[a]);
    if (tot == 0) continue;
    double diff = double(pos[a] - neg[a]);
    stat += diff * diff / tot;
  }
  EXPECT_LT(stat, 168.133);
}

TEST(Lattice, GroupedTwoByTwoByTwoIsTheCube) {
  QubitLattice lat = build_lattice({LatticeKind::dimerized_cubic, {2, 2, 2}, {}});
  EXPECT_EQ(lat.graph.num_vertices, 16);
  DisorderInstance inst = sample_couplings(lat, 5);
  TensorLattice grouped = group_dimers(inst);
  EXPECT_EQ(grouped.graph.num_vertices, 8);

  Graph cube = make_graph(8, {{0, 1}, {0, 2}, {1, 3}, {2, 3},
                              {4, 5}, {4, 6}, {5, 7}, {6, 7},
                              {0, 4}, {1, 5}, {2, 6}, {3, 7}});
  EXPECT_TRUE(graphs_isomorphic_brute(grouped.graph, cube));
}

TEST(Lattice, GroupingKeepsAllCouplings) {
  QubitLattice lat = build_lattice({LatticeKind::dimerized_cubic, {2, 2, 3}, {}});
  DisorderInstance inst = sample_couplings(lat, 7);
  TensorLattice grouped = group_dimers(inst);
  // No self-loops.
  for (const auto& [u, v] : grouped.graph.edges) EXPECT_NE(u, v);
  // One on-vertex term per dimer.
  std::size_t intra = 0;
  for (const auto& terms : grouped.vertex_terms) intra += terms.size();
  EXPECT_EQ(intra, lat.dimer_pairs.size());
  // Total terms conserved.
  std::size_t bond_terms = 0;
  for (const auto& terms : grouped.edge_terms) bond_terms += terms.size();
  EXPECT_EQ(bond_terms + intra, lat.graph.edges.size());
  EXPECT_LE(grouped.graph.max_degree(), 6);
}

TEST(Lattice, GroupDimersRequiresPairing) {
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {3, 3}, {}});
  DisorderInstance inst = sample_couplings(lat, 1);
  EXPECT_THROW(group_dimers(inst), InvalidInputError);
}

TEST(Lattice, EdgeListRoundTrip) {
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {3, 3}, {}});
  DisorderInstance inst = sample_couplings(lat, 321);
  std::stringstream buf;
  save_edge_list(inst, buf);
  DisorderInstance loaded = load_edge_list(buf);
  EXPECT_EQ(loaded.lattice.graph.edges, inst.lattice.graph.edges);
  EXPECT_EQ(loaded.numerators, inst.numerators);
  EXPECT_EQ(loaded.seed, inst.seed);
}

TEST(Lattice, EdgeListRejectsBadRows) {
  std::stringstream self_loop("0 0 5\n");
  EXPECT_THROW(load_edge_list(self_loop), InvalidInputError);
  std::stringstream out_of_range("0 1 129\n");
  EXPECT_THROW(load_edge_list(out_of_range), InvalidInputError);
  std::stringstream dup("0 1 5\n1 0 7\n");
  EXPECT_THROW(load_edge_list(dup), InvalidInputError);
}

TEST(Lattice, CylinderColumnsFormRing) {
  QubitLattice lat = build_lattice({LatticeKind::cylinder, {4, 3}, {}});
  DisorderInstance inst = sample_couplings(lat, 2);
  TensorLattice tl = as_tensor_lattice(inst);
  ASSERT_EQ(tl.columns.size(), 3u);
  EXPECT_TRUE(tl.column_ring);
  for (const auto& col : tl.columns) EXPECT_EQ(col.size(), 4u);
  // Consecutive rows within a column are adjacent.
  for (const auto& col : tl.columns)
    for (std::size_t r = 0; r + 1 < col.size(); ++r)
      EXPECT_GE(tl.graph.edge_index(col[r], col[r + 1]), 0);
}
