/**
 * @file common.hpp
 * @brief Shared aliases and small numeric helpers.
 */
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace xlvr {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::ArrayXd;
using RMat = Eigen::MatrixXd;
using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;

// Reporting floor for dB conversion of vanishing ratios.
inline constexpr double kDbFloor = -120.0;

inline double to_db(double linear) {
  if (linear <= 1e-12) return kDbFloor;
  return 10.0 * std::log10(linear);
}

inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace xlvr
