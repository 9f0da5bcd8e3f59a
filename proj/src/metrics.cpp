#include "xlvr/metrics.hpp"

#include <cmath>

namespace xlvr::metrics {

double nmse(const CVec& h_hat, const CVec& h) {
  require(h_hat.size() == h.size(), "nmse: length mismatch");
  const double denom = h.squaredNorm();
  if (denom <= 0.0) throw std::invalid_argument("nmse: zero true channel");
  return (h_hat - h).squaredNorm() / denom;
}

double sdr(const RVec& u_hat_hard, const RVec& u_true) {
  require(u_hat_hard.size() == u_true.size(), "sdr: length mismatch");
  const auto len = u_true.size();
  Eigen::Index hamming = 0;
  for (Eigen::Index i = 0; i < len; ++i) {
    if ((u_hat_hard[i] != 0.0) != (u_true[i] != 0.0)) ++hamming;
  }
  return 1.0 - static_cast<double>(hamming) / static_cast<double>(len);
}

RVec harden(const RVec& u_soft) {
  RVec hard(u_soft.size());
  for (Eigen::Index i = 0; i < u_soft.size(); ++i) hard[i] = u_soft[i] >= 0.5 ? 1.0 : 0.0;
  return hard;
}

BatchStat batch_stat(const std::vector<double>& per_sample) {
  BatchStat s;
  s.count = static_cast<int>(per_sample.size());
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : per_sample) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : per_sample) ss += (v - s.mean) * (v - s.mean);
    const double stddev = std::sqrt(ss / (s.count - 1));
    s.ci_halfwidth = 1.96 * stddev / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

}  // namespace xlvr::metrics
