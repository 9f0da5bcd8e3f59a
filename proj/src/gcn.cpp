#include "xlvr/gcn.hpp"

#include <cmath>

namespace xlvr::gcn {

NodeFeatures build_node_features(const CVec& h_dun) {
  const int n = static_cast<int>(h_dun.size());
  require(n >= 2, "build_node_features: need at least 2 antennas");
  NodeFeatures f;
  f.X = RMat::Zero(n + 1, kFeatureDim);
  f.energy = RVec(n);
  for (int i = 0; i < n; ++i) {
    const double re = h_dun[i].real();
    const double im = h_dun[i].imag();
    const double e = std::hypot(re, im);
    f.energy[i] = e;
    f.X(i + 1, 0) = re;
    f.X(i + 1, 1) = im;
    f.X(i + 1, 2) = e;
    f.X(i + 1, 3) = static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return f;
}

Adjacency build_adjacency(const NodeFeatures& features, double zeta, double tau) {
  require(tau > 0.0, "build_adjacency: tau must be positive");
  const int n = static_cast<int>(features.energy.size());
  Adjacency adj;
  adj.hard = RMat::Zero(n + 1, n + 1);
  adj.soft = RMat::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i) {
    const double e = features.energy[i];
    const double hard = e > zeta ? 1.0 : 0.0;
    const double soft = 1.0 / (1.0 + std::exp(-(e - zeta) / tau));
    adj.hard(0, i + 1) = adj.hard(i + 1, 0) = hard;
    adj.soft(0, i + 1) = adj.soft(i + 1, 0) = soft;
  }
  return adj;
}

double init_threshold(const NodeFeatures& features) {
  require(features.energy.size() >= 1, "init_threshold: empty feature set");
  return features.energy.mean();
}

RMat normalize_adjacency(const RMat& G) {
  require(G.rows() == G.cols(), "normalize_adjacency: G must be square");
  const auto n = G.rows();
  RMat gi = G + RMat::Identity(n, n);
  RVec d = gi.rowwise().sum().array();
  if ((d <= 0.0).any()) throw std::domain_error("normalize_adjacency: zero row in G + I");
  RVec dinv_sqrt = d.rsqrt();
  return dinv_sqrt.matrix().asDiagonal() * gi * dinv_sqrt.matrix().asDiagonal();
}

RMat gcn_propagate(const RMat& X, const RMat& G_bar, const std::vector<RMat>& w_gcn) {
  require(!w_gcn.empty(), "gcn_propagate: need at least one layer");
  require(G_bar.rows() == X.rows() && G_bar.cols() == X.rows(), "gcn_propagate: shape mismatch");
  RMat cur = X;
  for (size_t l = 0; l < w_gcn.size(); ++l) {
    require(w_gcn[l].rows() == cur.cols() && w_gcn[l].cols() == kFeatureDim,
            "gcn_propagate: weight shape mismatch");
    cur = G_bar * cur * w_gcn[l];
    if (l + 1 < w_gcn.size()) cur = cur.array().tanh();
  }
  return cur;
}

VrMask vr_head(const RMat& X_L, const Eigen::Vector4d& w_out) {
  require(X_L.cols() == kFeatureDim, "vr_head: feature dimension mismatch");
  const auto n = X_L.rows() - 1;
  VrMask mask;
  mask.u = RVec(n);
  mask.u_hard = RVec(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double logit = X_L.row(i + 1).dot(w_out.transpose());
    mask.u[i] = 1.0 / (1.0 + std::exp(-logit));
    mask.u_hard[i] = mask.u[i] >= 0.5 ? 1.0 : 0.0;
  }
  return mask;
}

CVec extract_channel(const RMat& X_L) {
  require(X_L.cols() >= 2, "extract_channel: need at least two feature columns");
  const auto n = X_L.rows() - 1;
  CVec h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = cplx(X_L(i + 1, 0), X_L(i + 1, 1));
  return h;
}

}  // namespace xlvr::gcn
