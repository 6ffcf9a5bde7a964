#ifndef GLASSTN_GAUGE_HPP
#define GLASSTN_GAUGE_HPP

#include <Eigen/Dense>

#include "glasstn/belief_propagation.hpp"
#include "glasstn/network_state.hpp"

namespace glasstn {

struct GateOptions {
  double cutoff = 1e-14;     // relative singular-value floor
  double stale_tol = 1e-6;   // max accepted message staleness
  double env_floor = 1e-12;  // relative eigenvalue floor for environment roots
};

struct TruncationReport {
  double discarded_weight = 0.0;
  int new_dim = 1;
};

// Simple update with rank-1 message environments: dress the two tensors with
// the square roots of their incoming messages, apply the gate on the reduced
// bond problem, truncate to chi_max, undress, and refresh the bond messages.
// The gate matrix acts on the joint physical space (u slots major).
TruncationReport apply_two_site_gate_bp(NetworkState& state, int edge,
                                        const Eigen::MatrixXcd& gate,
                                        NormMessages& messages, int chi_max,
                                        const GateOptions& options = {});

struct GaugeOptions {
  // Bond directions conditioned worse than cond_limit (equivalently, with
  // environment weight under env_floor relative) are collapsed out of the
  // bond instead of inverted.
  double cond_limit = 1e12;
  double env_floor = 1e-12;
};

// Symmetric Vidal form: bond weights hold the (descending) bond spectra and
// each tensor absorbs sqrt of its adjacent weights, so plain contraction of
// the returned network reproduces the state exactly (up to collapsed
// dead directions). Throws GaugeFailureError when a message has no positive
// weight left.
NetworkState to_vidal_gauge(const NetworkState& state, const NormMessages& messages,
                            const GaugeOptions& options = {});

// Vidal-gauge conversion, bond-weight truncation, reabsorption.
NetworkState truncate_state(const NetworkState& state, const NormMessages& messages,
                            int chi_target, const GaugeOptions& options = {});

}  // namespace glasstn

#endif
