#ifndef GLASSTN_TEST_SUPPORT_HPP
#define GLASSTN_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include "glasstn/lattice.hpp"
#include "glasstn/tensor.hpp"

namespace glasstn::tsupport {

// Independent contraction oracle: sums over every assignment of every leg by
// brute force. Exponential; only for tiny networks.
cplx nested_loop_contract(const std::vector<Tensor>& tensors);

// Uniform random labeled tree via random attachment.
Graph random_tree(int num_vertices, std::mt19937_64& rng);

// Random loopy graph: one or two short cycles (length 3..5) plus optional
// bridges and pendant paths, at most max_edges edges.
Graph random_loopy_graph(int max_edges, std::mt19937_64& rng);

// Closed tensor network over a graph: one tensor per vertex, one leg per
// incident edge, all bond extents equal to dim.
std::vector<Tensor> random_closed_network(const Graph& graph, int dim,
                                          std::mt19937_64& rng);
// Same with per-edge extents drawn from 1..max_dim.
std::vector<Tensor> random_closed_network_mixed(const Graph& graph, int max_dim,
                                                std::mt19937_64& rng);

}  // namespace glasstn::tsupport

#endif
