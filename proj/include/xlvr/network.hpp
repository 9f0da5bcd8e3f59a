/**
 * @file network.hpp
 * @brief End-to-end forward passes of the unfolded VR-aware estimator.
 *
 * Per layer: GCN infers (h_gcn, u) from the current iterate, the gated
 * residual CNN synthesizes the prior z, and one weighted gradient step
 * refines the channel. The ablation variant skips the GCN and gate and
 * uses uniform weighting (the plain unfolded baseline).
 *
 * Two routes exist on purpose: a plain evaluation path composed from the
 * module functions, and a tape route used for training; tests pin them to
 * each other.
 */
#pragma once

#include <optional>

#include "xlvr/dun.hpp"
#include "xlvr/gcn.hpp"
#include "xlvr/params.hpp"
#include "xlvr/prox.hpp"
#include "xlvr/tape.hpp"

namespace xlvr::net {

enum class Variant { kVrNet, kAblation };

struct ForwardTrace {
  std::vector<CVec> h_dun;
  std::vector<CVec> h_gcn;
  std::vector<RVec> u;
  std::vector<CVec> z;
};

struct PlainOutput {
  CVec h_hat;
  RVec u_soft;  // empty for the ablation variant
};

struct ForwardOptions {
  Variant variant = Variant::kVrNet;
  bool soft_adjacency = false;   // training uses the sigmoid relaxation
  bool auto_threshold = false;   // probe mode: zeta = per-sample mean energy
  ForwardTrace* trace = nullptr;
  std::vector<double>* zeta_used = nullptr;  // records per-layer thresholds
};

/// Normalization scale for raw observations: ||y|| / sqrt(len(y)).
double input_scale(const CVec& y);

/// Forward on an already-normalized observation.
PlainOutput forward_plain(const NetworkState& state, const CMat& A, const CVec& y_norm,
                          const ForwardOptions& opt = {});

/// Raw-observation entry point: normalizes, runs forward, rescales h_hat.
PlainOutput estimate(const NetworkState& state, const CMat& A, const CVec& y,
                     Variant variant = Variant::kVrNet);

/// Leaf vars per tensor id, bound to one tape.
struct TapeBinding {
  std::vector<ad::Var> leaf;
};

TapeBinding bind_params(ad::Tape& tape, const NetworkState& state);

struct TapeOutput {
  ad::Var h_hat;     // stacked 2N
  ad::Var u_soft;    // invalid for ablation
  ad::Var u_logits;  // invalid for ablation
};

/// Training forward (always the soft adjacency). A must outlive the tape.
TapeOutput forward_tape(ad::Tape& tape, const NetworkState& state, const TapeBinding& bind,
                        const CMat* A, const CVec& y_norm, Variant variant);

/// Training loss on the tape: (1-alpha) * NMSE + alpha * BCE-with-logits.
ad::Var loss_tape(ad::Tape& tape, const TapeOutput& out, const CVec& h_norm, const RVec& u_true,
                  double alpha, Variant variant);

/// Plain joint loss and metrics for one sample. u_soft may be empty only
/// when alpha == 0.
struct LossParts {
  double loss = 0.0;
  double nmse = 0.0;
  double bce = 0.0;
  double sdr = 1.0;
};

LossParts joint_loss(const CVec& h_hat, const CVec& h, const RVec& u_soft, const RVec& u_true,
                     double alpha);

}  // namespace xlvr::net
