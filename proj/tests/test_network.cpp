#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <iostream>

#include "xlvr/channel.hpp"
#include "xlvr/measurement.hpp"
#include "xlvr/network.hpp"
#include "xlvr/rng.hpp"

using namespace xlvr;

namespace {

struct Scene {
  ArrayConfig cfg{16, 4, 100e9, 2};
  net::NetworkState state;
  CMat A;
  CVec y_norm;
  CVec h_norm;
  RVec u_true;

  explicit Scene(uint64_t seed, int pilots = 8, int layers = 3) {
    net::ArchConfig arch;
    arch.layers = layers;
    arch.conv_channels = 6;
    arch.tau = 0.05;
    state = net::init_network(arch, seed);
    // Nonzero thresholds so the soft adjacency has structure.
    for (auto& layer : state.layers) state.params.data(layer.zeta)[0] = 0.8;

    auto sample = channel::sample_channel(cfg, derive_seed(seed, "sample", 0));
    A = measure::make_combiner(cfg, pilots, derive_seed(seed, "comb", 0));
    const double sigma2 = measure::sigma2_for_snr(sample.h, A, 10.0);
    auto block = measure::observe(sample.h, A, cfg.n_rf, sigma2, derive_seed(seed, "noise", 0));
    const double s = net::input_scale(block.y);
    y_norm = block.y / s;
    h_norm = sample.h / s;
    u_true = sample.u;
  }
};

}  // namespace

TEST_CASE("tape forward equals the plain forward with soft adjacency") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Scene sc(seed);

    ad::Tape tape;
    auto bind = net::bind_params(tape, sc.state);
    auto out = net::forward_tape(tape, sc.state, bind, &sc.A, sc.y_norm, net::Variant::kVrNet);

    net::ForwardOptions opt;
    opt.soft_adjacency = true;
    auto plain = net::forward_plain(sc.state, sc.A, sc.y_norm, opt);

    const ad::Arr& hh = tape.val(out.h_hat);
    const int n = sc.cfg.n_antennas;
    for (int i = 0; i < n; ++i) {
      CHECK(hh[i] == doctest::Approx(plain.h_hat[i].real()).epsilon(1e-11));
      CHECK(hh[n + i] == doctest::Approx(plain.h_hat[i].imag()).epsilon(1e-11));
    }
    const ad::Arr& uu = tape.val(out.u_soft);
    for (int i = 0; i < n; ++i) CHECK(uu[i] == doctest::Approx(plain.u_soft[i]).epsilon(1e-11));
  }
}

TEST_CASE("tape forward equals plain forward for the ablation variant") {
  Scene sc(7);
  ad::Tape tape;
  auto bind = net::bind_params(tape, sc.state);
  auto out = net::forward_tape(tape, sc.state, bind, &sc.A, sc.y_norm, net::Variant::kAblation);

  net::ForwardOptions opt;
  opt.variant = net::Variant::kAblation;
  auto plain = net::forward_plain(sc.state, sc.A, sc.y_norm, opt);
  CHECK(plain.u_soft.size() == 0);

  const ad::Arr& hh = tape.val(out.h_hat);
  const int n = sc.cfg.n_antennas;
  for (int i = 0; i < n; ++i) {
    CHECK(hh[i] == doctest::Approx(plain.h_hat[i].real()).epsilon(1e-11));
    CHECK(hh[n + i] == doctest::Approx(plain.h_hat[i].imag()).epsilon(1e-11));
  }
}

TEST_CASE("end-to-end parameter gradients match finite differences") {
  Scene sc(11, 8, 2);
  const double alpha = 0.5;

  auto loss_value = [&](const net::NetworkState& st) {
    ad::Tape tape;
    auto bind = net::bind_params(tape, st);
    auto out = net::forward_tape(tape, st, bind, &sc.A, sc.y_norm, net::Variant::kVrNet);
    ad::Var loss = net::loss_tape(tape, out, sc.h_norm, sc.u_true, alpha, net::Variant::kVrNet);
    return tape.val(loss)[0];
  };

  ad::Tape tape;
  auto bind = net::bind_params(tape, sc.state);
  auto out = net::forward_tape(tape, sc.state, bind, &sc.A, sc.y_norm, net::Variant::kVrNet);
  ad::Var loss = net::loss_tape(tape, out, sc.h_norm, sc.u_true, alpha, net::Variant::kVrNet);
  tape.backward(loss);

  // Spot-check a spread of tensors: scalars, GCN weights, conv weights.
  std::vector<std::string> names = {
      "layer0/gamma",       "layer0/mu_raw",      "layer0/zeta",         "layer1/zeta",
      "layer0/gcn/w0",      "layer0/gcn/w_out",   "layer0/gate/conv_in/w",
      "layer1/prox/conv1/w", "layer1/prox/conv2/b"};
  const double step = 1e-6;
  for (const auto& name : names) {
    const int id = sc.state.params.find(name);
    REQUIRE(id >= 0);
    ad::Arr analytic = tape.grad_of(bind.leaf[id]);
    const Eigen::Index probe = std::min<Eigen::Index>(analytic.size(), 3);
    for (Eigen::Index i = 0; i < probe; ++i) {
      net::NetworkState mod = sc.state;
      mod.params.data(id)[i] += step;
      const double up = loss_value(mod);
      mod.params.data(id)[i] -= 2 * step;
      const double down = loss_value(mod);
      const double numeric = (up - down) / (2 * step);
      CHECK(analytic[i] == doctest::Approx(numeric).epsilon(2e-4).scale(1.0));
    }
  }
}

TEST_CASE("threshold gradient is nonzero for generic inputs") {
  Scene sc(13);
  ad::Tape tape;
  auto bind = net::bind_params(tape, sc.state);
  auto out = net::forward_tape(tape, sc.state, bind, &sc.A, sc.y_norm, net::Variant::kVrNet);
  ad::Var loss = net::loss_tape(tape, out, sc.h_norm, sc.u_true, 0.5, net::Variant::kVrNet);
  tape.backward(loss);
  double total = 0.0;
  for (const auto& layer : sc.state.layers)
    total += std::abs(tape.grad_of(bind.leaf[layer.zeta])[0]);
  CHECK(total > 0.0);
}

TEST_CASE("joint loss identities") {
  Scene sc(17);
  CVec h = sc.h_norm;
  RVec u = sc.u_true;

  // Perfect prediction with saturated mask: loss ~ 0.
  RVec u_sat(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u_sat[i] = u[i] > 0.5 ? 1.0 - 1e-12 : 1e-12;
  auto parts = net::joint_loss(h, h, u_sat, u, 0.5);
  CHECK(parts.loss == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(parts.sdr == 1.0);

  // alpha = 0 -> loss equals NMSE exactly.
  CVec noisy = h * 1.1;
  auto nm = net::joint_loss(noisy, h, u_sat, u, 0.0);
  CHECK(nm.loss == doctest::Approx(nm.nmse).epsilon(1e-15));
  CHECK(nm.nmse == doctest::Approx(0.01).epsilon(1e-9));  // |1.1 - 1|^2

  // Zero channel raises.
  CHECK_THROWS_AS(net::joint_loss(h, CVec::Zero(h.size()), u_sat, u, 0.5), std::invalid_argument);

  // Missing mask with alpha > 0 raises.
  CHECK_THROWS_AS(net::joint_loss(h, h, RVec(), u, 0.5), std::invalid_argument);
}

TEST_CASE("estimate rescales outputs to the raw channel") {
  Scene sc(19);
  auto sample = channel::sample_channel(sc.cfg, 123);
  CMat a = measure::make_combiner(sc.cfg, 8, 5);
  auto block = measure::observe(sample.h, a, sc.cfg.n_rf, 0.0, 6);
  auto out = net::estimate(sc.state, a, block.y, net::Variant::kVrNet);
  CHECK(out.h_hat.size() == sc.cfg.n_antennas);
  // Raw channel magnitudes are ~1e-4; a normalized-only output would be ~1.
  CHECK(out.h_hat.norm() < 1.0);
}

TEST_CASE("auto-threshold probe mode records per-layer mean energies") {
  Scene sc(23);
  net::ForwardOptions opt;
  opt.auto_threshold = true;
  opt.soft_adjacency = true;
  std::vector<double> zetas;
  opt.zeta_used = &zetas;
  net::ForwardTrace trace;
  opt.trace = &trace;
  net::forward_plain(sc.state, sc.A, sc.y_norm, opt);
  REQUIRE(static_cast<int>(zetas.size()) == sc.state.arch.layers);
  // Layer 0 threshold is the mean energy of the matched-filter init.
  auto init = dun::init_estimate(sc.y_norm, sc.A);
  CHECK(zetas[0] == doctest::Approx(init.h0.cwiseAbs().mean()).epsilon(1e-12));
  CHECK(static_cast<int>(trace.h_dun.size()) == sc.state.arch.layers);
}
