/**
 * @file array_config.hpp
 * @brief Static ULA geometry and user placement parameters.
 */
#pragma once

#include "xlvr/common.hpp"

namespace xlvr {

/// Uniform linear array at the base station, split into S stationary
/// subarrays of N/S antennas each, with half-wavelength spacing.
struct ArrayConfig {
  int n_antennas = 64;    // N
  int n_subarrays = 8;    // S, must divide N
  double carrier_hz = 100e9;
  int n_rf = 4;           // RF chains

  int antennas_per_subarray() const { return n_antennas / n_subarrays; }
  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double spacing() const { return wavelength() / 2.0; }

  /// Signed antenna offset from the array center, 1-based antenna index:
  /// delta_n = (2n - N - 1) / 2.
  double delta(int n_one_based) const {
    return (2.0 * n_one_based - n_antennas - 1.0) / 2.0;
  }

  void validate() const {
    require(n_antennas >= 1, "ArrayConfig: n_antennas must be >= 1");
    require(n_subarrays >= 1, "ArrayConfig: n_subarrays must be >= 1");
    require(n_antennas % n_subarrays == 0, "ArrayConfig: n_subarrays must divide n_antennas");
    require(carrier_hz > 0, "ArrayConfig: carrier_hz must be positive");
    require(n_rf >= 1 && n_rf <= n_antennas, "ArrayConfig: n_rf must be in [1, n_antennas]");
  }
};

/// Angle/distance pair of a user terminal. Sampled geometries lie in
/// theta in (-sqrt(3)/2, sqrt(3)/2) and r in (4, 88) m; the struct itself
/// also holds out-of-range values (e.g. far-field probes).
struct UserGeometry {
  double theta = 0.0;  // dimensionless angle parameter
  double r = 10.0;     // distance in meters
};

inline constexpr double kThetaBound = 0.86602540378443864676;  // sqrt(3)/2
inline constexpr double kRangeMin = 4.0;
inline constexpr double kRangeMax = 88.0;

}  // namespace xlvr
