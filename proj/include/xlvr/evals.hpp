/**
 * @file evals.hpp
 * @brief Paired SNR/pilot sweeps over an extensible method set.
 *
 * Every method at one sweep point sees identical (h, A, noise)
 * realizations; the pilot sweep uses nested measurement sets (prefixes of
 * one long pilot block) so adding pilots never removes information.
 */
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xlvr/channel.hpp"
#include "xlvr/measurement.hpp"
#include "xlvr/metrics.hpp"
#include "xlvr/network.hpp"

namespace xlvr::evals {

struct Estimate {
  CVec h_hat;
  std::optional<RVec> u_hard;
};

/// A method maps one observation to a channel estimate and, optionally, a
/// VR mask. The true sample is available for oracle baselines (the genie
/// reads the support, nothing else may).
struct EvalSample {
  const channel::ChannelSample* truth;
  const measure::PilotBlock* block;
  const ArrayConfig* cfg;
};

struct Method {
  std::string name;
  std::function<Estimate(const EvalSample&)> run;
};

struct PointResult {
  double sweep_var = 0.0;
  std::string method;
  double nmse_db = 0.0;
  double nmse_ci_db = 0.0;   // half-width mapped to dB at the mean
  double sdr = std::numeric_limits<double>::quiet_NaN();
  double sdr_ci = std::numeric_limits<double>::quiet_NaN();
  int n_samples = 0;
  int failures = 0;
  double nmse_mean_ratio = 0.0;      // mean of per-sample ratios
  double nmse_ratio_of_means = 0.0;  // secondary convention, logged
};

struct EvalResult {
  std::string sweep_name;  // "snr_db" | "pilots"
  std::vector<PointResult> points;
  std::vector<std::pair<double, uint32_t>> input_crc;  // per sweep point
};

/// Least-squares on the true VR support, zeros elsewhere; falls back to a
/// flagged ridge solve when the restricted system is rank-deficient.
CVec genie_ls(const CVec& y, const CMat& A, const RVec& u_true, bool* regularized = nullptr);

/// Blind ridge least squares on the full support, lambda = sigma2.
CVec ridge_ls(const CVec& y, const CMat& A, double sigma2);

/// Matched filter (N/M) A^H y.
CVec matched_filter(const CVec& y, const CMat& A);

Method make_genie_ls_method();
Method make_ridge_ls_method();
Method make_matched_filter_method();
Method make_network_method(std::string name, const net::NetworkState& state, net::Variant variant);

EvalResult sweep_snr(const std::vector<Method>& methods,
                     const std::vector<channel::ChannelSample>& dataset,
                     const std::vector<double>& snr_list_db, const ArrayConfig& cfg, int n_pilots,
                     uint64_t seed);

EvalResult sweep_pilots(const std::vector<Method>& methods,
                        const std::vector<channel::ChannelSample>& dataset,
                        const std::vector<int>& pilot_list, const ArrayConfig& cfg, double snr_db,
                        uint64_t seed);

/// Results CSV with the pinned column set.
std::string to_csv(const EvalResult& result);
EvalResult from_csv(const std::string& text);

}  // namespace xlvr::evals
