#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "xlvr/dun.hpp"
#include "xlvr/rng.hpp"

using namespace xlvr;
using namespace xlvr::dun;

namespace {

struct Instance {
  CVec h, y, z;
  CMat A;
  RVec u;
};

Instance random_instance(int n, int m, uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Instance inst;
  inst.h = CVec(n);
  inst.z = CVec(n);
  inst.y = CVec(m);
  inst.A = CMat(m, n);
  inst.u = RVec(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    inst.h[i] = cplx(g(rng), g(rng));
    inst.z[i] = cplx(g(rng), g(rng));
    inst.u[i] = unif(rng);
  }
  for (int i = 0; i < m; ++i) inst.y[i] = cplx(g(rng), g(rng));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) inst.A(i, j) = cplx(g(rng), g(rng)) / std::sqrt(double(n));
  return inst;
}

/// Central finite differences of the objective wrt Re/Im of each entry.
CVec fd_gradient(const Instance& inst, double mu, double beta, double step) {
  CVec grad(inst.h.size());
  for (Eigen::Index i = 0; i < inst.h.size(); ++i) {
    CVec hp = inst.h, hm = inst.h;
    hp[i] += step;
    hm[i] -= step;
    const double d_re = (vr_weighted_objective(hp, inst.y, inst.A, inst.z, inst.u, mu, beta) -
                         vr_weighted_objective(hm, inst.y, inst.A, inst.z, inst.u, mu, beta)) /
                        (2.0 * step);
    hp = inst.h;
    hm = inst.h;
    hp[i] += cplx(0.0, step);
    hm[i] -= cplx(0.0, step);
    const double d_im = (vr_weighted_objective(hp, inst.y, inst.A, inst.z, inst.u, mu, beta) -
                         vr_weighted_objective(hm, inst.y, inst.A, inst.z, inst.u, mu, beta)) /
                        (2.0 * step);
    // Wirtinger convention of the printed update: bracket = d/dRe + j d/dIm.
    grad[i] = cplx(d_re, d_im);
  }
  return grad;
}

}  // namespace

TEST_CASE("weight matrix diagonal") {
  RVec u(3);
  u << 1.0, 0.0, 0.5;
  RVec w = weight_matrix_diag(u, 99.0);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(10.0));
  CHECK(w[2] == doctest::Approx(std::sqrt(1.0 + 49.5)));

  RVec w0 = weight_matrix_diag(u, 0.0);
  CHECK((w0 == 1.0).all());

  RVec bad(1);
  bad << 1.5;
  CHECK_THROWS_AS(weight_matrix_diag(bad, 1.0), std::domain_error);
  bad << -0.1;
  CHECK_THROWS_AS(weight_matrix_diag(bad, 1.0), std::domain_error);
}

TEST_CASE("objective identities") {
  auto inst = random_instance(8, 6, 5);
  // h = z and y = A h -> 0.
  CVec y = inst.A * inst.h;
  CHECK(vr_weighted_objective(inst.h, y, inst.A, inst.h, inst.u, 2.0, 10.0) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // u = 1 reduces to the uniform objective.
  RVec ones = RVec::Ones(8);
  const double with_mask =
      vr_weighted_objective(inst.h, inst.y, inst.A, inst.z, ones, 2.0, 10.0);
  const double uniform =
      vr_weighted_objective(inst.h, inst.y, inst.A, inst.z, ones, 2.0, 0.0);
  CHECK(with_mask == doctest::Approx(uniform).epsilon(1e-15));

  // Brute-force recomputation term by term.
  double brute = 0.0;
  CVec r = inst.y - inst.A * inst.h;
  for (Eigen::Index i = 0; i < r.size(); ++i) brute += 0.5 * std::norm(r[i]);
  const double mu = 1.7, beta = 10.0;
  for (Eigen::Index i = 0; i < inst.h.size(); ++i) {
    const double w2 = 1.0 + beta * (1.0 - inst.u[i]);
    brute += 0.5 * mu * w2 * std::norm(inst.h[i] - inst.z[i]);
  }
  CHECK(vr_weighted_objective(inst.h, inst.y, inst.A, inst.z, inst.u, mu, beta) ==
        doctest::Approx(brute).epsilon(1e-12));

  // Penalty is nondecreasing in beta, strictly when some u_i < 1, h_i != z_i.
  double prev = -1.0;
  for (double beta_v : {0.0, 1.0, 10.0, 100.0}) {
    const double val = vr_weighted_objective(inst.h, inst.y, inst.A, inst.z, inst.u, mu, beta_v);
    CHECK(val > prev);
    prev = val;
  }
}

TEST_CASE("gradient fidelity against finite differences") {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(8, 6, derive_seed(1000, "fd", trial));
    const double mu = 0.8, beta = 10.0;
    CVec analytic = dun_gradient(inst.h, inst.y, inst.A, inst.z, inst.u, mu, beta);
    CVec numeric = fd_gradient(inst, mu, beta, 1e-6);
    const double rel = (analytic - numeric).norm() / numeric.norm();
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("dun step special cases") {
  // A = I, mu = 0, gamma = 1 -> lands on y.
  const int n = 8;
  auto inst = random_instance(n, n, 77);
  CMat eye = CMat::Identity(n, n);
  DunLayerParams p;
  p.gamma = 1.0;
  p.mu = 0.0;
  p.beta = 10.0;
  CVec next = dun_step(inst.h, inst.y, eye, inst.z, inst.u, p);
  CHECK((next - inst.y).norm() < 1e-12);

  // gamma = 0 -> identity.
  p.gamma = 0.0;
  p.mu = 1.0;
  CVec frozen = dun_step(inst.h, inst.y, inst.A, inst.z, inst.u, p);
  CHECK(frozen == inst.h);
  CVec frozen_mdisr = mdisr_step(inst.h, inst.y, inst.A, inst.z, p);
  CHECK(frozen_mdisr == inst.h);
}

TEST_CASE("uniform-weight reduction is bitwise") {
  auto inst = random_instance(8, 6, 91);
  DunLayerParams p;
  p.gamma = 0.3;
  p.mu = 1.3;
  p.beta = 10.0;
  RVec ones = RVec::Ones(8);
  CVec a = dun_step(inst.h, inst.y, inst.A, inst.z, ones, p);
  CVec b = mdisr_step(inst.h, inst.y, inst.A, inst.z, p);
  CHECK(a == b);

  // beta = 0 with arbitrary mask also reduces to the uniform step.
  p.beta = 0.0;
  CVec c = dun_step(inst.h, inst.y, inst.A, inst.z, inst.u, p);
  CHECK(c == b);
}

TEST_CASE("descent under a safe step size") {
  auto inst = random_instance(8, 6, 13);
  const double mu = 0.9, beta = 10.0;
  // L = lambda_max(A^H A) + mu max w^2.
  Eigen::SelfAdjointEigenSolver<CMat> eig(inst.A.adjoint() * inst.A);
  const double lip = eig.eigenvalues().maxCoeff() + mu * (1.0 + beta);
  DunLayerParams p;
  p.mu = mu;
  p.beta = beta;
  p.gamma = 0.9 / lip;

  CVec h = inst.h;
  double prev = vr_weighted_objective(h, inst.y, inst.A, inst.z, inst.u, mu, beta);
  for (int it = 0; it < 50; ++it) {
    h = dun_step(h, inst.y, inst.A, inst.z, inst.u, p);
    const double cur = vr_weighted_objective(h, inst.y, inst.A, inst.z, inst.u, mu, beta);
    CHECK(cur <= prev + 1e-12 * std::abs(prev));
    const double gnorm = dun_gradient(h, inst.y, inst.A, inst.z, inst.u, mu, beta).norm();
    if (gnorm > 1e-9) CHECK(cur < prev);
    prev = cur;
  }

  // Small-gamma descent for the uniform variant too.
  for (double gamma : {1e-3, 1e-2}) {
    DunLayerParams q;
    q.gamma = gamma;
    q.mu = mu;
    q.beta = 0.0;
    RVec ones = RVec::Ones(8);
    CVec h1 = mdisr_step(inst.h, inst.y, inst.A, inst.z, q);
    CHECK(vr_weighted_objective(h1, inst.y, inst.A, inst.z, ones, mu, 0.0) <=
          vr_weighted_objective(inst.h, inst.y, inst.A, inst.z, ones, mu, 0.0));
  }
}

TEST_CASE("init estimate") {
  auto inst = random_instance(8, 6, 3);
  auto init = init_estimate(inst.y, inst.A);
  CHECK(init.h0.size() == 8);
  CHECK((init.h0 - inst.A.adjoint() * inst.y).norm() == 0.0);
  CHECK(init.z0 == init.h0);
  CHECK((init.u0 == 1.0).all());

  auto zero = init_estimate(CVec::Zero(6), inst.A);
  CHECK(zero.h0.norm() == 0.0);
}
