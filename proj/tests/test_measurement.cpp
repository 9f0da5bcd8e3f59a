#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "xlvr/channel.hpp"
#include "xlvr/measurement.hpp"
#include "xlvr/rng.hpp"

using namespace xlvr;
using namespace xlvr::measure;

namespace {
ArrayConfig cfg64() { return ArrayConfig{64, 8, 100e9, 4}; }
}  // namespace

TEST_CASE("combiner entries have constant modulus 1/sqrt(N)") {
  auto cfg = cfg64();
  CMat a = make_combiner(cfg, 16, 7);
  CHECK(a.rows() == 64);
  CHECK(a.cols() == 64);
  const double sqrt_n = std::sqrt(double(cfg.n_antennas));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(std::abs(a(i, j)) * sqrt_n - 1.0));
  CHECK(worst < 1e-12);
}

TEST_CASE("paper-scale combiner is 128 x 256") {
  ArrayConfig cfg{256, 8, 100e9, 4};
  CMat a = make_combiner(cfg, 32, 1);
  CHECK(a.rows() == 128);
  CHECK(a.cols() == 256);
  CHECK(a.rows() < a.cols());  // underdetermined
}

TEST_CASE("noiseless observation is exactly A h") {
  auto cfg = cfg64();
  auto sample = channel::sample_channel(cfg, 3);
  CMat a = make_combiner(cfg, 16, 5);
  auto block = observe(sample.h, a, cfg.n_rf, 0.0, 11);
  CHECK((block.y - a * sample.h).norm() == 0.0);
  CHECK_THROWS_AS(observe(sample.h, a, cfg.n_rf, -1.0, 11), std::domain_error);
}

TEST_CASE("observation is deterministic and affine in h") {
  auto cfg = cfg64();
  auto s1 = channel::sample_channel(cfg, 21);
  auto s2 = channel::sample_channel(cfg, 22);
  CMat a = make_combiner(cfg, 16, 5);
  const double sigma2 = 0.01;

  auto b1 = observe(s1.h, a, cfg.n_rf, sigma2, 77);
  auto b1_again = observe(s1.h, a, cfg.n_rf, sigma2, 77);
  CHECK(b1.y == b1_again.y);

  // Same noise seed: observe(h1 + h2) - observe(h2) = A h1.
  CVec sum = s1.h + s2.h;
  auto b_sum = observe(sum, a, cfg.n_rf, sigma2, 77);
  auto b2 = observe(s2.h, a, cfg.n_rf, sigma2, 77);
  CHECK((b_sum.y - b2.y - a * s1.h).norm() < 1e-12 * b_sum.y.norm());
}

TEST_CASE("stacked noise energy matches P sigma2 N_RF") {
  ArrayConfig cfg{32, 4, 100e9, 2};
  auto sample = channel::sample_channel(cfg, 8);
  const int pilots = 4;
  CMat a = make_combiner(cfg, pilots, 9);
  const double sigma2 = 0.25;
  const int draws = 10000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) {
    auto block = observe(sample.h, a, cfg.n_rf, sigma2, derive_seed(1, "noise", i));
    acc += (block.y - a * sample.h).squaredNorm();
  }
  const double expected = pilots * sigma2 * cfg.n_rf;
  CHECK(std::abs(acc / draws - expected) / expected < 0.02);
}

TEST_CASE("sigma2_for_snr follows the dB law") {
  auto cfg = cfg64();
  auto sample = channel::sample_channel(cfg, 31);
  CMat a = make_combiner(cfg, 16, 5);
  const double p_s = (a * sample.h).squaredNorm() / double(a.rows());

  CHECK(sigma2_for_snr(sample.h, a, 0.0) == doctest::Approx(p_s).epsilon(1e-12));
  CHECK(sigma2_for_snr(sample.h, a, 10.0) == doctest::Approx(p_s / 10.0).epsilon(1e-12));
  const double s10 = sigma2_for_snr(sample.h, a, 10.0);
  const double s20 = sigma2_for_snr(sample.h, a, 20.0);
  CHECK(s20 / s10 == doctest::Approx(0.1).epsilon(1e-12));

  // Monotone: larger SNR, strictly smaller sigma2.
  double prev = 1e300;
  for (double snr : {-5.0, 0.0, 5.0, 10.0, 15.0}) {
    const double s = sigma2_for_snr(sample.h, a, snr);
    CHECK(s < prev);
    prev = s;
  }
  CHECK_THROWS_AS(sigma2_for_snr(CVec::Zero(cfg.n_antennas), a, 10.0), std::invalid_argument);
}
