/**
 * @file prox.hpp
 * @brief Learned proximal operator: a CSI-gated residual CNN replacing the
 *        prior-fitting subproblem,
 *          z = Conv2(ReLU(Conv1(h .* m))),  m = Sigmoid(Gate([Re, Im, u])).
 *
 * Convolutions are 1-D along the antenna axis with zero padding; complex
 * signals travel as two real channels. The gate is a
 * feature-conv -> two residual blocks -> feature-conv stack whose sigmoid
 * output multiplies each complex entry by a real weight in (0,1).
 */
#pragma once

#include <vector>

#include "xlvr/common.hpp"

namespace xlvr::prox {

/// 1-D convolution weights, flat layout [out][in][k], plus per-out bias.
struct Conv1d {
  int in_c = 1;
  int out_c = 1;
  int k = 3;
  RVec w;  // out_c * in_c * k
  RVec b;  // out_c

  void validate() const {
    require(k % 2 == 1, "Conv1d: kernel length must be odd");
    require(w.size() == static_cast<Eigen::Index>(out_c) * in_c * k, "Conv1d: weight size");
    require(b.size() == out_c, "Conv1d: bias size");
  }
};

/// x is channel-major (in_c * n), output channel-major (out_c * n);
/// zero padding keeps the antenna length.
RVec conv1d_forward(const RVec& x, const Conv1d& c, int n);

/// Direct sliding-window reference used by tests.
RVec conv1d_naive(const RVec& x, const Conv1d& c, int n);

struct GateParams {
  Conv1d conv_in;    // 3 -> C
  Conv1d res1_a, res1_b;  // C -> C
  Conv1d res2_a, res2_b;  // C -> C
  Conv1d conv_out;   // C -> 1
};

struct ProxParams {
  int channels = 16;
  int kernel = 3;
  Conv1d conv1;  // 2 -> C
  Conv1d conv2;  // C -> 2
  GateParams gate;
};

/// m = Sigmoid(gate([Re(h), Im(h), u])), entries in (0,1), length N.
RVec gate_forward(const CVec& h_gcn, const RVec& u, const GateParams& gate);

/// z = Conv2(ReLU(Conv1(h .* m))); `gate_override` substitutes a fixed
/// gate vector (ablation bypass uses all-ones).
CVec prox_forward(const CVec& h_gcn, const RVec& u, const ProxParams& params,
                  const RVec* gate_override = nullptr);

}  // namespace xlvr::prox
