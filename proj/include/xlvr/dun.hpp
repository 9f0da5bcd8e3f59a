/**
 * @file dun.hpp
 * @brief Unfolded estimator layer math: VR-weighted objective and the
 *        trainable gradient-descent channel update.
 *
 * The per-layer subproblem is
 *   min_h 1/2 ||y - A h||^2 + mu/2 || W(u)^{1/2} (h - z) ||^2
 * with diagonal weights w_i = sqrt(1 + beta (1 - u_i)) that penalize
 * energy on antennas outside the current VR estimate. One inexact
 * gradient step with trainable step size replaces the closed-form solve.
 */
#pragma once

#include "xlvr/common.hpp"

namespace xlvr::dun {

struct DunLayerParams {
  double gamma = 0.1;  // trainable step size
  double mu = 0.5;     // penalty (kept positive by the trainer's reparameterization)
  double beta = 10.0;  // fixed out-of-VR penalty
};

/// Diagonal of W(u)^{1/2}: w_i = sqrt(1 + beta (1 - u_i)).
RVec weight_matrix_diag(const RVec& u, double beta);

/// 1/2 ||y - A h||^2 + mu/2 || W(u)^{1/2} (h - z) ||^2.
double vr_weighted_objective(const CVec& h, const CVec& y, const CMat& A, const CVec& z,
                             const RVec& u, double mu, double beta);

/// Wirtinger gradient of the objective with respect to conj(h):
/// A^H (A h - y) + mu W(u) (h - z), with W applied elementwise (w_i^2).
CVec dun_gradient(const CVec& h, const CVec& y, const CMat& A, const CVec& z, const RVec& u,
                  double mu, double beta);

/// h_next = h - gamma * dun_gradient(...).
CVec dun_step(const CVec& h, const CVec& y, const CMat& A, const CVec& z, const RVec& u,
              const DunLayerParams& params);

/// Ablation update with uniform weighting (u = 1, so W = I).
CVec mdisr_step(const CVec& h, const CVec& y, const CMat& A, const CVec& z,
                const DunLayerParams& params);

struct InitState {
  CVec h0;  // matched filter A^H y
  CVec z0;  // = h0
  RVec u0;  // all ones
};

InitState init_estimate(const CVec& y, const CMat& A);

}  // namespace xlvr::dun
