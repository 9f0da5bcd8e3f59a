#include "xlvr/prox.hpp"

#include <cmath>

namespace xlvr::prox {

RVec conv1d_forward(const RVec& x, const Conv1d& c, int n) {
  c.validate();
  require(x.size() == static_cast<Eigen::Index>(c.in_c) * n, "conv1d_forward: input size");
  const int half = c.k / 2;
  RVec out(static_cast<Eigen::Index>(c.out_c) * n);
  for (int oc = 0; oc < c.out_c; ++oc) {
    double* op = out.data() + static_cast<Eigen::Index>(oc) * n;
    for (int pos = 0; pos < n; ++pos) op[pos] = c.b[oc];
    for (int ic = 0; ic < c.in_c; ++ic) {
      const double* xp = x.data() + static_cast<Eigen::Index>(ic) * n;
      const double* wp = c.w.data() + (static_cast<Eigen::Index>(oc) * c.in_c + ic) * c.k;
      for (int t = 0; t < c.k; ++t) {
        const double wv = wp[t];
        if (wv == 0.0) continue;
        const int off = t - half;
        const int lo = std::max(0, -off);
        const int hi = std::min(n, n - off);
        for (int pos = lo; pos < hi; ++pos) op[pos] += wv * xp[pos + off];
      }
    }
  }
  return out;
}

RVec conv1d_naive(const RVec& x, const Conv1d& c, int n) {
  c.validate();
  const int half = c.k / 2;
  RVec out(static_cast<Eigen::Index>(c.out_c) * n);
  for (int oc = 0; oc < c.out_c; ++oc) {
    for (int pos = 0; pos < n; ++pos) {
      double acc = c.b[oc];
      for (int ic = 0; ic < c.in_c; ++ic) {
        for (int t = 0; t < c.k; ++t) {
          const int src = pos + t - half;
          if (src < 0 || src >= n) continue;
          acc += c.w[(static_cast<Eigen::Index>(oc) * c.in_c + ic) * c.k + t] *
                 x[static_cast<Eigen::Index>(ic) * n + src];
        }
      }
      out[static_cast<Eigen::Index>(oc) * n + pos] = acc;
    }
  }
  return out;
}

namespace {

RVec relu(const RVec& x) { return x.max(0.0); }

RVec residual_block(const RVec& x, const Conv1d& a, const Conv1d& b, int n) {
  return x + conv1d_forward(relu(conv1d_forward(x, a, n)), b, n);
}

RVec stack_channels(const CVec& h, const RVec* u) {
  const int n = static_cast<int>(h.size());
  RVec x(static_cast<Eigen::Index>(u ? 3 : 2) * n);
  for (int i = 0; i < n; ++i) {
    x[i] = h[i].real();
    x[n + i] = h[i].imag();
  }
  if (u) x.segment(2 * n, n) = *u;
  return x;
}

}  // namespace

RVec gate_forward(const CVec& h_gcn, const RVec& u, const GateParams& gate) {
  const int n = static_cast<int>(h_gcn.size());
  require(u.size() == n, "gate_forward: mask length mismatch");
  RVec x = stack_channels(h_gcn, &u);
  RVec g = conv1d_forward(x, gate.conv_in, n);
  g = residual_block(g, gate.res1_a, gate.res1_b, n);
  g = residual_block(g, gate.res2_a, gate.res2_b, n);
  RVec logits = conv1d_forward(g, gate.conv_out, n);
  return 1.0 / (1.0 + (-logits).exp());
}

CVec prox_forward(const CVec& h_gcn, const RVec& u, const ProxParams& params,
                  const RVec* gate_override) {
  const int n = static_cast<int>(h_gcn.size());
  RVec m = gate_override ? *gate_override : gate_forward(h_gcn, u, params.gate);
  require(m.size() == n, "prox_forward: gate length mismatch");
  CVec gated = (h_gcn.array() * m.cast<cplx>()).matrix();
  RVec x = stack_channels(gated, nullptr);
  RVec hidden = relu(conv1d_forward(x, params.conv1, n));
  RVec out = conv1d_forward(hidden, params.conv2, n);
  CVec z(n);
  for (int i = 0; i < n; ++i) z[i] = cplx(out[i], out[n + i]);
  return z;
}

}  // namespace xlvr::prox
