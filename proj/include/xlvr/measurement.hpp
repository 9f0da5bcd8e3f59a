/**
 * @file measurement.hpp
 * @brief Hybrid analog combining observation model.
 *
 * Per pilot slot p the base station applies a constant-modulus analog
 * combiner A_p (N_RF x N) to the antenna signal, y_p = A_p (h + n_p), and
 * the P slot outputs are stacked into one observation of length N_RF * P.
 * Noise enters at the antennas and is combined, so stacked-noise entries
 * are correlated within a slot.
 */
#pragma once

#include "xlvr/array_config.hpp"
#include "xlvr/common.hpp"

namespace xlvr::measure {

enum class CombinerPolicy { kPerSample, kFixed };

struct PilotConfig {
  int n_pilots = 16;  // P
  double snr_db = 10.0;
  CombinerPolicy policy = CombinerPolicy::kPerSample;
  uint64_t combiner_seed = 0;

  void validate() const { require(n_pilots >= 1, "PilotConfig: n_pilots must be >= 1"); }
};

struct PilotBlock {
  CMat A;         // (N_RF * P) x N, row-stack of per-slot combiners
  CVec y;         // length N_RF * P
  double sigma2 = 0.0;  // per-antenna noise variance used
};

/// Random-phase analog combiner: entries (1/sqrt(N)) exp(j phi),
/// phi ~ U[0, 2pi), stacked over P slots.
CMat make_combiner(const ArrayConfig& cfg, int n_pilots, uint64_t seed);

/// Apply per-slot combining with antenna noise n_p ~ CN(0, sigma2 I_N).
PilotBlock observe(const CVec& h, const CMat& A, int n_rf, double sigma2, uint64_t noise_seed);

/// Noise variance meeting a target SNR: sigma2 = p_s / 10^(snr_db/10) with
/// p_s the average received signal power per combined output.
double sigma2_for_snr(const CVec& h, const CMat& A, double snr_db);

}  // namespace xlvr::measure
