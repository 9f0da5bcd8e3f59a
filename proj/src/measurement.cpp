#include "xlvr/measurement.hpp"

#include <cmath>
#include <numbers>

#include "xlvr/rng.hpp"

namespace xlvr::measure {

CMat make_combiner(const ArrayConfig& cfg, int n_pilots, uint64_t seed) {
  cfg.validate();
  require(n_pilots >= 1, "make_combiner: n_pilots must be >= 1");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int rows = cfg.n_rf * n_pilots;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_antennas));
  CMat a(rows, cfg.n_antennas);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cfg.n_antennas; ++j) {
      const double p = phase(rng);
      a(i, j) = scale * cplx(std::cos(p), std::sin(p));
    }
  }
  return a;
}

PilotBlock observe(const CVec& h, const CMat& A, int n_rf, double sigma2, uint64_t noise_seed) {
  require(A.cols() == h.size(), "observe: A columns must match channel length");
  require(n_rf >= 1 && A.rows() % n_rf == 0, "observe: A rows must be a multiple of n_rf");
  if (sigma2 < 0.0) throw std::domain_error("observe: sigma2 must be nonnegative");

  const int n = static_cast<int>(h.size());
  const int slots = static_cast<int>(A.rows()) / n_rf;
  const double std_per_comp = std::sqrt(sigma2 / 2.0);

  auto rng = make_rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  PilotBlock block;
  block.A = A;
  block.sigma2 = sigma2;
  block.y = CVec(A.rows());
  CVec noisy(n);
  for (int p = 0; p < slots; ++p) {
    for (int j = 0; j < n; ++j) {
      const cplx np(std_per_comp * gauss(rng), std_per_comp * gauss(rng));
      noisy[j] = h[j] + np;
    }
    block.y.segment(p * n_rf, n_rf) = A.middleRows(p * n_rf, n_rf) * noisy;
  }
  return block;
}

double sigma2_for_snr(const CVec& h, const CMat& A, double snr_db) {
  const double energy = (A * h).squaredNorm();
  if (energy <= 0.0) throw std::invalid_argument("sigma2_for_snr: zero received signal");
  const double p_s = energy / static_cast<double>(A.rows());
  return p_s / std::pow(10.0, snr_db / 10.0);
}

}  // namespace xlvr::measure
