/**
 * @file metrics.hpp
 * @brief Channel estimation (NMSE) and VR recognition (SDR) metrics.
 */
#pragma once

#include <vector>

#include "xlvr/common.hpp"

namespace xlvr::metrics {

/// Per-sample error ratio ||h_hat - h||^2 / ||h||^2. Throws on zero h.
double nmse(const CVec& h_hat, const CVec& h);

/// Successful detection ratio 1 - d_H(u, u_hat) / length for binary masks.
double sdr(const RVec& u_hat_hard, const RVec& u_true);

/// Hard threshold at 0.5; ties break to 1.
RVec harden(const RVec& u_soft);

/// Mean of per-sample ratios plus a 95% normal-approximation half-width.
struct BatchStat {
  double mean = 0.0;
  double ci_halfwidth = 0.0;
  int count = 0;
};

BatchStat batch_stat(const std::vector<double>& per_sample);

inline double nmse_db(double ratio) { return to_db(ratio); }

}  // namespace xlvr::metrics
