#include "xlvr/dun.hpp"

namespace xlvr::dun {

namespace {
void check_mask(const RVec& u) {
  if ((u < 0.0).any() || (u > 1.0).any())
    throw std::domain_error("VR mask entries must lie in [0, 1]");
}
}  // namespace

RVec weight_matrix_diag(const RVec& u, double beta) {
  check_mask(u);
  require(beta >= 0.0, "weight_matrix_diag: beta must be nonnegative");
  return (1.0 + beta * (1.0 - u)).sqrt();
}

double vr_weighted_objective(const CVec& h, const CVec& y, const CMat& A, const CVec& z,
                             const RVec& u, double mu, double beta) {
  require(A.cols() == h.size() && A.rows() == y.size(), "vr_weighted_objective: shape mismatch");
  require(z.size() == h.size() && u.size() == h.size(), "vr_weighted_objective: shape mismatch");
  const double fidelity = 0.5 * (y - A * h).squaredNorm();
  const RVec w = weight_matrix_diag(u, beta);
  const double penalty = 0.5 * mu * (w.square() * (h - z).array().abs2()).sum();
  return fidelity + penalty;
}

CVec dun_gradient(const CVec& h, const CVec& y, const CMat& A, const CVec& z, const RVec& u,
                  double mu, double beta) {
  require(A.cols() == h.size() && A.rows() == y.size(), "dun_gradient: shape mismatch");
  require(z.size() == h.size() && u.size() == h.size(), "dun_gradient: shape mismatch");
  check_mask(u);
  const RVec w2 = 1.0 + beta * (1.0 - u);  // diagonal of W(u), no square root
  CVec grad = A.adjoint() * (A * h - y);
  grad.array() += mu * w2.cast<cplx>() * (h - z).array();
  return grad;
}

CVec dun_step(const CVec& h, const CVec& y, const CMat& A, const CVec& z, const RVec& u,
              const DunLayerParams& params) {
  return h - params.gamma * dun_gradient(h, y, A, z, u, params.mu, params.beta);
}

CVec mdisr_step(const CVec& h, const CVec& y, const CMat& A, const CVec& z,
                const DunLayerParams& params) {
  const RVec ones = RVec::Ones(h.size());
  DunLayerParams uniform = params;
  uniform.beta = 0.0;  // W = I regardless of mask
  return dun_step(h, y, A, z, ones, uniform);
}

InitState init_estimate(const CVec& y, const CMat& A) {
  InitState s;
  s.h0 = A.adjoint() * y;
  s.z0 = s.h0;
  s.u0 = RVec::Ones(A.cols());
  return s;
}

}  // namespace xlvr::dun
