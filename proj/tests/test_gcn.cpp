#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "xlvr/gcn.hpp"
#include "xlvr/rng.hpp"

using namespace xlvr;
using namespace xlvr::gcn;

TEST_CASE("node features layout") {
  CVec h(4);
  h << cplx(3.0, 4.0), cplx(0.0, 0.0), cplx(-1.0, 0.0), cplx(0.0, 2.0);
  auto f = build_node_features(h);
  CHECK(f.X.rows() == 5);
  CHECK(f.X.cols() == 4);
  CHECK(f.X.row(0).norm() == 0.0);  // user node
  CHECK(f.X(1, 0) == 3.0);
  CHECK(f.X(1, 1) == 4.0);
  CHECK(f.X(1, 2) == 5.0);  // |3 + 4j|
  CHECK(f.X(1, 3) == 0.0);
  CHECK(f.X(4, 3) == 1.0);
  CHECK(f.X(2, 3) == doctest::Approx(1.0 / 3.0));

  // All-zero channel: only the position column is nonzero.
  auto fz = build_node_features(CVec::Zero(4));
  CHECK(fz.X.col(0).norm() == 0.0);
  CHECK(fz.X.col(1).norm() == 0.0);
  CHECK(fz.X.col(2).norm() == 0.0);
  CHECK(fz.X.col(3).norm() > 0.0);

  CHECK_THROWS_AS(build_node_features(CVec::Zero(1)), std::invalid_argument);

  CVec big = CVec::Zero(256);
  CHECK(build_node_features(big).X.rows() == 257);
}

TEST_CASE("adjacency thresholding, hard and soft") {
  CVec h(2);
  h << cplx(0.5, 0.0), cplx(1.5, 0.0);
  auto f = build_node_features(h);
  auto adj = build_adjacency(f, 1.0, 0.05);
  CHECK(adj.hard(0, 1) == 0.0);
  CHECK(adj.hard(0, 2) == 1.0);
  CHECK(adj.hard(1, 0) == 0.0);
  CHECK(adj.hard(2, 0) == 1.0);
  CHECK(adj.hard.diagonal().norm() == 0.0);
  CHECK(adj.hard(1, 2) == 0.0);  // no antenna-antenna edges

  // zeta -> -inf: soft star saturates to all-ones edges.
  auto low = build_adjacency(f, -1e9, 1e6);
  CHECK(low.soft(0, 1) > 0.49);
  auto lower = build_adjacency(f, -1e3, 1.0);
  CHECK(lower.soft(0, 1) == doctest::Approx(1.0).epsilon(1e-9));

  // tau -> 0+: soft converges to hard away from the threshold.
  auto rng = make_rng(17);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    CVec he(8);
    for (int i = 0; i < 8; ++i) he[i] = cplx(unif(rng), 0.0);
    auto fe = build_node_features(he);
    const double zeta = 1.0;
    const double tau = 1e-4;
    auto a = build_adjacency(fe, zeta, tau);
    for (int i = 1; i <= 8; ++i) {
      if (std::abs(fe.energy[i - 1] - zeta) > 10 * tau)
        CHECK(std::abs(a.soft(0, i) - a.hard(0, i)) < 1e-3);
    }
  }
}

TEST_CASE("threshold initialization is the mean energy") {
  CVec h(2);
  h << cplx(1.0, 0.0), cplx(3.0, 0.0);
  CHECK(init_threshold(build_node_features(h)) == doctest::Approx(2.0));
  CHECK(init_threshold(build_node_features(CVec::Zero(4))) == 0.0);

  auto rng = make_rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  CVec hr(16);
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) {
    hr[i] = cplx(g(rng), g(rng));
    acc += std::abs(hr[i]);
  }
  CHECK(std::abs(init_threshold(build_node_features(hr)) - acc / 16.0) < 1e-12);
}

TEST_CASE("normalized adjacency oracle") {
  // G = 0 -> identity.
  RMat zero = RMat::Zero(4, 4);
  CHECK((normalize_adjacency(zero) - RMat::Identity(4, 4)).norm() == 0.0);

  // 3-node star: row sums of G + I are [3, 2, 2]; G_bar(0,1) = 1/sqrt(6).
  RMat star = RMat::Zero(3, 3);
  star(0, 1) = star(1, 0) = 1.0;
  star(0, 2) = star(2, 0) = 1.0;
  RMat gb = normalize_adjacency(star);
  CHECK(gb(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-14));
  CHECK(gb(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(gb(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK((gb - gb.transpose()).norm() < 1e-14);

  // Brute-force D^{-1/2}(G+I)D^{-1/2} on random graphs + spectral radius.
  auto rng = make_rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 10;
    RMat g = RMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (unif(rng) < 0.3) g(i, j) = g(j, i) = unif(rng);
    RMat gi = g + RMat::Identity(n, n);
    RVec d = gi.rowwise().sum().array();
    RMat brute(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) brute(i, j) = gi(i, j) / std::sqrt(d[i] * d[j]);
    RMat fast = normalize_adjacency(g);
    CHECK((fast - brute).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::SelfAdjointEigenSolver<RMat> eig(fast);
    CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("propagation identities") {
  // W = I, G = 0 (so G_bar = I), linear single layer -> X unchanged.
  CVec h(3);
  h << cplx(0.3, -0.4), cplx(1.0, 0.5), cplx(-0.2, 0.1);
  auto f = build_node_features(h);
  RMat gbar = normalize_adjacency(RMat::Zero(4, 4));
  std::vector<RMat> w = {RMat::Identity(4, 4)};
  RMat out = gcn_propagate(f.X, gbar, w);
  CHECK((out - f.X).norm() < 1e-14);

  // Zero input, no biases -> zero output.
  RMat zero_x = RMat::Zero(4, 4);
  std::vector<RMat> w2 = {RMat::Random(4, 4), RMat::Random(4, 4)};
  CHECK(gcn_propagate(zero_x, gbar, w2).norm() == 0.0);

  // Single layer, 3-node star: matches explicit G_bar X W.
  RMat star = RMat::Zero(3, 3);
  star(0, 1) = star(1, 0) = 1.0;
  star(0, 2) = star(2, 0) = 1.0;
  RMat gb = normalize_adjacency(star);
  RMat x(3, 4);
  x << 0, 0, 0, 0, 1, 2, 3, 4, -1, 0.5, 2, 1;
  RMat wr = RMat::Random(4, 4);
  RMat expect = gb * x * wr;
  CHECK((gcn_propagate(x, gb, {wr}) - expect).norm() < 1e-12);
}

TEST_CASE("VR head and channel extraction") {
  CVec h(3);
  h << cplx(0.3, -0.4), cplx(1.0, 0.5), cplx(-0.2, 0.1);
  auto f = build_node_features(h);

  // Zero readout -> all 0.5, hardened to 1 (tie breaks upward).
  auto mask = vr_head(f.X, Eigen::Vector4d::Zero());
  CHECK(mask.u.size() == 3);
  CHECK((mask.u == 0.5).all());
  CHECK((mask.u_hard == 1.0).all());

  // Saturation toward {1, 0} for large logits.
  RMat big = RMat::Zero(3, 4);
  big(1, 0) = 1e3;
  big(2, 0) = -1e3;
  Eigen::Vector4d w_out(1.0, 0.0, 0.0, 0.0);
  auto sat = vr_head(big, w_out);
  CHECK(sat.u[0] == doctest::Approx(1.0));
  CHECK(sat.u[1] == doctest::Approx(0.0));
  // Strictly inside (0,1) wherever the logit is representably finite.
  RMat mid = RMat::Zero(3, 4);
  mid(1, 0) = 30.0;
  mid(2, 0) = -30.0;
  auto m = vr_head(mid, w_out);
  for (Eigen::Index i = 0; i < m.u.size(); ++i) {
    CHECK(m.u[i] > 0.0);
    CHECK(m.u[i] < 1.0);
  }

  // Extraction inverts the feature layout; user row dropped.
  CVec back = extract_channel(f.X);
  CHECK((back - h).norm() == 0.0);
  RMat row(2, 4);
  row << 0, 0, 0, 0, 0.3, -0.4, 0.0, 0.0;
  CHECK(extract_channel(row)[0] == cplx(0.3, -0.4));
  CHECK(extract_channel(RMat::Zero(4, 4)).norm() == 0.0);
}

TEST_CASE("antenna permutation changes features (absolute positions)") {
  CVec h(4);
  h << cplx(1.0, 0.0), cplx(2.0, 0.0), cplx(3.0, 0.0), cplx(4.0, 0.0);
  CVec perm(4);
  perm << h[3], h[2], h[1], h[0];
  auto fa = build_node_features(h);
  auto fb = build_node_features(perm);
  // Position column is fixed, so permuted inputs do not permute features.
  RMat permuted_rows(5, 4);
  permuted_rows.row(0) = fa.X.row(0);
  permuted_rows.row(1) = fa.X.row(4);
  permuted_rows.row(2) = fa.X.row(3);
  permuted_rows.row(3) = fa.X.row(2);
  permuted_rows.row(4) = fa.X.row(1);
  CHECK((fb.X - permuted_rows).norm() > 0.0);
}
