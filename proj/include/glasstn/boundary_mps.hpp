#ifndef GLASSTN_BOUNDARY_MPS_HPP
#define GLASSTN_BOUNDARY_MPS_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/belief_propagation.hpp"
#include "glasstn/network_state.hpp"

namespace glasstn {

struct BmpsOptions {
  int rank = 4;             // MPS message rank r
  double fit_tol = 1e-10;   // relative cost change per fitting sweep
  int max_fit_sweeps = 20;
  double ring_tol = 1e-10;  // relative change of the ring scalar per lap
  int max_laps = 40;
  int threads = 1;          // parallelism over base sites
};

// Rank-bounded MPS message across one inter-column cut; site i carries the
// (ket, bra) legs of the i-th cut edge.
struct MpsMessage {
  std::vector<Tensor> sites;
  std::vector<Index> vbonds;  // sites+1 entries, extent-1 at the boundaries
  int ortho_center = -1;
  int max_rank = 1;
};

// A sandwich network organized into a ring (or open line) of columns.
// Requires at most one cut edge per (row, side); vertical structure within a
// column is free-form.
class CylinderSandwich {
 public:
  CylinderSandwich(const NetworkState& state, const QubitOperators& ops,
                   std::vector<std::vector<int>> columns, bool ring,
                   const std::vector<Index>* shared_bra = nullptr);

  int num_columns() const { return static_cast<int>(columns_.size()); }
  int num_cuts() const { return ring_ ? num_columns() : num_columns() - 1; }
  bool ring() const { return ring_; }
  int rows(int c) const { return static_cast<int>(columns_[c].size()); }
  int vertex(int c, int row) const { return columns_[c][row]; }

  struct CutSite {
    Index ket, bra;
    int row_lo = 0;  // attachment row in the lower-numbered column
    int row_hi = 0;  // attachment row in the other column
  };
  // Cut c sits between column c and column (c+1) mod C.
  const std::vector<CutSite>& cut(int c) const { return cuts_[c]; }

  const std::vector<Tensor>& factors(int c, int row) const;
  // Ket factor with its physical leg replaced (for RDM readout); the vertex
  // must hold exactly one qubit.
  Tensor ket_with_phys(int c, int row, const Index& fresh) const;
  const Index& phys(int c, int row) const;

 private:
  BpNetwork net_;
  std::vector<std::vector<int>> columns_;
  bool ring_ = false;
  std::vector<std::vector<CutSite>> cuts_;
  std::vector<int> column_of_;
  std::vector<int> row_of_;
  std::vector<Index> phys_;  // per vertex (single-qubit readout)
};

struct FitReport {
  double cost = 0.0;
  int sweeps = 0;
  std::vector<double> cost_trace;  // per center update
};

// Variationally fit the outgoing message of `column` at fixed rank by one-site
// sweeps: incoming on one cut, outgoing on the other. `init` supplies the
// starting guess (compressed to rank if needed).
MpsMessage fit_mps_message(const CylinderSandwich& sandwich, int column, bool forward,
                           const MpsMessage* incoming, const MpsMessage& init,
                           const BmpsOptions& options, FitReport* report = nullptr);

MpsMessage random_mps_message(const std::vector<CylinderSandwich::CutSite>& cut,
                              int rank, std::uint64_t seed);
MpsMessage compress_mps(const MpsMessage& m, int rank);
cplx mps_overlap(const MpsMessage& a, const MpsMessage& b);  // bilinear

struct RingResult {
  std::vector<MpsMessage> forward;   // cut c: column c -> c+1
  std::vector<MpsMessage> backward;  // cut c: column c+1 -> c
  cplx scalar = 0.0;
  int laps = 0;
};

// Pass MPS messages around the ring until the scalar estimate settles; on an
// open line one forward+backward lap is already exact at sufficient rank.
RingResult ring_converge(const CylinderSandwich& sandwich, const BmpsOptions& options,
                         const RingResult* warm = nullptr);

// One-site conditioned density matrices rho[p_ket, p_bra] for every row of a
// column, from the two incident converged messages.
std::vector<Eigen::Matrix2cd> column_rdms(const CylinderSandwich& sandwich,
                                          const RingResult& ring, int column);

struct BmpsCorrelators {
  Eigen::MatrixXd pairs;   // symmetrized, unit diagonal
  Eigen::MatrixXd raw;     // row i: measurements from the base-i network
  std::vector<double> singles;
  cplx norm_scalar = 0.0;
};

// All <sz_i sz_j> and <sz_i> of a column-partitioned state in O(L^2):
// one ring per base site, each read out in O(L).
BmpsCorrelators bmps_all_correlators(const NetworkState& state,
                                     const BmpsOptions& options);

// Extent-1 bonds appended between the given vertex pairs (the state is
// unchanged); used to close an open lattice into a measurement cylinder.
NetworkState pad_trivial_bonds(const NetworkState& state,
                               const std::vector<std::pair<int, int>>& new_edges,
                               std::vector<std::vector<int>> columns, bool ring);

}  // namespace glasstn

#endif
