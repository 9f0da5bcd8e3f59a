/**
 * @file gcn.hpp
 * @brief User-antenna graph construction, normalized propagation, and the
 *        VR mask head.
 *
 * The graph is a star: node 0 is the user (zero input features), nodes
 * 1..N are antennas with features [Re(h_n), Im(h_n), |h_n|, (n-1)/(N-1)].
 * An edge (0, n) exists when the antenna energy exceeds a learnable
 * threshold; training uses a sigmoid relaxation of that indicator so the
 * threshold receives gradients, evaluation uses the hard rule.
 */
#pragma once

#include <vector>

#include "xlvr/common.hpp"

namespace xlvr::gcn {

inline constexpr int kFeatureDim = 4;

/// (N+1) x 4 node features; row 0 is the user node (zeros at layer input).
struct NodeFeatures {
  RMat X;        // (N+1) x 4
  RVec energy;   // e_n = |h_n|, length N (antenna rows only)
};

struct GcnParams {
  double zeta = 0.0;              // edge threshold
  double tau = 0.05;              // relaxation temperature, > 0
  std::vector<RMat> w_gcn;        // per propagation layer, 4 x 4
  Eigen::Vector4d w_out = Eigen::Vector4d::Zero();  // VR head readout
};

struct VrMask {
  RVec u;       // soft mask in (0,1), length N
  RVec u_hard;  // thresholded at 0.5, ties break to 1
};

NodeFeatures build_node_features(const CVec& h_dun);

/// Hard star adjacency g_{0,n} = 1 iff e_n > zeta, plus its sigmoid
/// relaxation sigma((e_n - zeta)/tau). Diagonals are zero; self-loops are
/// added during normalization.
struct Adjacency {
  RMat hard;  // (N+1) x (N+1)
  RMat soft;
};

Adjacency build_adjacency(const NodeFeatures& features, double zeta, double tau);

/// zeta(0) = mean antenna energy.
double init_threshold(const NodeFeatures& features);

/// G_bar = D^{-1/2} (G + I) D^{-1/2}, D = diag(row sums of G + I).
RMat normalize_adjacency(const RMat& G);

/// L stacked propagations X <- act(G_bar X W_l); hidden layers use tanh,
/// the final layer is linear so extracted channel values are unbounded.
RMat gcn_propagate(const RMat& X, const RMat& G_bar, const std::vector<RMat>& w_gcn);

/// Sigmoid readout of the final features; the user row is discarded.
VrMask vr_head(const RMat& X_L, const Eigen::Vector4d& w_out);

/// First two feature columns of the antenna rows as a complex vector.
CVec extract_channel(const RMat& X_L);

}  // namespace xlvr::gcn
