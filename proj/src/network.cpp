#include "xlvr/network.hpp"

#include <cmath>

#include "xlvr/metrics.hpp"

namespace xlvr::net {

double input_scale(const CVec& y) {
  const double s = y.norm() / std::sqrt(static_cast<double>(y.size()));
  return s > 1e-300 ? s : 1.0;
}

namespace {

prox::Conv1d conv_view(const NetworkState& state, const ConvHandles& h, int in_c, int out_c) {
  prox::Conv1d c;
  c.in_c = in_c;
  c.out_c = out_c;
  c.k = state.arch.conv_kernel;
  c.w = state.params.data(h.w);
  c.b = state.params.data(h.b);
  return c;
}

prox::ProxParams prox_view(const NetworkState& state, const LayerHandles& layer) {
  const int c = state.arch.conv_channels;
  const int gw = state.arch.gate_width();
  prox::ProxParams p;
  p.channels = c;
  p.kernel = state.arch.conv_kernel;
  p.conv1 = conv_view(state, layer.prox_conv1, 2, c);
  p.conv2 = conv_view(state, layer.prox_conv2, c, 2);
  p.gate.conv_in = conv_view(state, layer.gate.conv_in, 3, gw);
  p.gate.res1_a = conv_view(state, layer.gate.res1_a, gw, gw);
  p.gate.res1_b = conv_view(state, layer.gate.res1_b, gw, gw);
  p.gate.res2_a = conv_view(state, layer.gate.res2_a, gw, gw);
  p.gate.res2_b = conv_view(state, layer.gate.res2_b, gw, gw);
  p.gate.conv_out = conv_view(state, layer.gate.conv_out, gw, 1);
  return p;
}

RMat gcn_weight(const NetworkState& state, int tensor_id) {
  const auto& flat = state.params.data(tensor_id);
  RMat w(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) w(i, j) = flat[i * 4 + j];
  return w;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

PlainOutput forward_plain(const NetworkState& state, const CMat& A, const CVec& y_norm,
                          const ForwardOptions& opt) {
  const int n = static_cast<int>(A.cols());
  auto init = dun::init_estimate(y_norm, A);
  CVec h = init.h0;
  RVec u_last;

  for (int t = 0; t < state.arch.layers; ++t) {
    const auto& layer = state.layers[t];
    dun::DunLayerParams dp;
    dp.gamma = state.params.data(layer.gamma)[0];
    dp.mu = softplus(state.params.data(layer.mu_raw)[0]);
    dp.beta = state.arch.beta;

    CVec h_gcn;
    CVec z;
    RVec u;
    if (opt.variant == Variant::kVrNet) {
      auto features = gcn::build_node_features(h);
      const double zeta = opt.auto_threshold ? gcn::init_threshold(features)
                                             : state.params.data(layer.zeta)[0];
      if (opt.zeta_used) opt.zeta_used->push_back(zeta);
      auto adj = gcn::build_adjacency(features, zeta, state.arch.tau > 0 ? state.arch.tau : 1e-3);
      RMat g_bar = gcn::normalize_adjacency(opt.soft_adjacency ? adj.soft : adj.hard);
      std::vector<RMat> weights;
      for (int id : layer.w_gcn) weights.push_back(gcn_weight(state, id));
      RMat x_l = gcn::gcn_propagate(features.X, g_bar, weights);
      Eigen::Vector4d w_out;
      for (int i = 0; i < 4; ++i) w_out[i] = state.params.data(layer.w_out)[i];
      auto mask = gcn::vr_head(x_l, w_out);
      u = mask.u;
      h_gcn = gcn::extract_channel(x_l);
      z = prox::prox_forward(h_gcn, u, prox_view(state, layer));
    } else {
      u = RVec::Ones(n);
      h_gcn = h;
      RVec ones = RVec::Ones(n);
      z = prox::prox_forward(h_gcn, u, prox_view(state, layer), &ones);
    }

    CVec h_next = opt.variant == Variant::kVrNet ? dun::dun_step(h, y_norm, A, z, u, dp)
                                                 : dun::mdisr_step(h, y_norm, A, z, dp);
    if (opt.trace) {
      opt.trace->h_dun.push_back(h_next);
      opt.trace->h_gcn.push_back(h_gcn);
      opt.trace->u.push_back(u);
      opt.trace->z.push_back(z);
    }
    h = h_next;
    u_last = u;
  }

  PlainOutput out;
  out.h_hat = h;
  if (opt.variant == Variant::kVrNet) out.u_soft = u_last;
  return out;
}

PlainOutput estimate(const NetworkState& state, const CMat& A, const CVec& y, Variant variant) {
  const double s = input_scale(y);
  ForwardOptions opt;
  opt.variant = variant;
  PlainOutput out = forward_plain(state, A, y / s, opt);
  out.h_hat *= s;
  return out;
}

TapeBinding bind_params(ad::Tape& tape, const NetworkState& state) {
  TapeBinding bind;
  bind.leaf.reserve(state.params.count());
  for (int id = 0; id < state.params.count(); ++id) bind.leaf.push_back(tape.input(state.params.data(id)));
  return bind;
}

namespace {

ad::Var stack_const(ad::Tape& tape, const CVec& v) {
  ad::Arr x(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x[i] = v[i].real();
    x[v.size() + i] = v[i].imag();
  }
  return tape.constant(std::move(x));
}

struct GcnTapeOut {
  ad::Var h_gcn;   // 2N
  ad::Var u;       // N
  ad::Var logits;  // N
};

GcnTapeOut gcn_tape(ad::Tape& tp, const NetworkState& state, const TapeBinding& bind,
                    const LayerHandles& layer, ad::Var h, int n, double tau) {
  ad::Var re = tp.slice(h, 0, n);
  ad::Var im = tp.slice(h, n, n);
  ad::Var e = tp.cabs(h);
  ad::Var p = tp.constant(ad::Arr::LinSpaced(n, 0.0, 1.0));

  // Soft star adjacency; the threshold gets gradients through the sigmoid.
  ad::Var s = tp.sigmoid(tp.muls(tp.ssub(e, bind.leaf[layer.zeta]), 1.0 / tau));
  ad::Var d0 = tp.adds(tp.sum(s), 1.0);
  ad::Var dn = tp.adds(s, 1.0);
  ad::Var isq0 = tp.inv(tp.sqrt_(d0));
  ad::Var isqn = tp.inv(tp.sqrt_(dn));
  ad::Var coef = tp.mul(s, tp.smul(isq0, isqn));  // s_n / sqrt(d0 dn)
  ad::Var g00 = tp.inv(d0);
  ad::Var gnn = tp.inv(dn);

  std::vector<ad::Var> xa = {re, im, e, p};
  ad::Var zero1 = tp.constant_scalar(0.0);
  std::vector<ad::Var> xu = {zero1, zero1, zero1, zero1};

  const int depth = static_cast<int>(layer.w_gcn.size());
  for (int l = 0; l < depth; ++l) {
    std::vector<ad::Var> ya(4), yu(4);
    for (int f = 0; f < 4; ++f) {
      ya[f] = tp.add(tp.mul(gnn, xa[f]), tp.smul(xu[f], coef));
      yu[f] = tp.add(tp.mul(g00, xu[f]), tp.dot(coef, xa[f]));
    }
    ad::Var w = bind.leaf[layer.w_gcn[l]];
    std::vector<ad::Var> za(4), zu(4);
    for (int j = 0; j < 4; ++j) {
      const std::vector<int> idx = {j, 4 + j, 8 + j, 12 + j};
      za[j] = tp.lincomb(ya, w, idx);
      zu[j] = tp.lincomb(yu, w, idx);
    }
    if (l + 1 < depth) {
      for (int f = 0; f < 4; ++f) {
        za[f] = tp.tanh_(za[f]);
        zu[f] = tp.tanh_(zu[f]);
      }
    }
    xa = za;
    xu = zu;
  }

  GcnTapeOut out;
  out.logits = tp.lincomb(xa, bind.leaf[layer.w_out], {0, 1, 2, 3});
  out.u = tp.sigmoid(out.logits);
  out.h_gcn = tp.concat({xa[0], xa[1]});
  return out;
}

ad::Var conv_tape(ad::Tape& tp, const TapeBinding& bind, const ConvHandles& h, ad::Var x,
                  int in_c, int out_c, int k, int n) {
  return tp.conv1d(x, bind.leaf[h.w], bind.leaf[h.b], in_c, out_c, k, n);
}

}  // namespace

TapeOutput forward_tape(ad::Tape& tp, const NetworkState& state, const TapeBinding& bind,
                        const CMat* A, const CVec& y_norm, Variant variant) {
  const int n = static_cast<int>(A->cols());
  const int c = state.arch.conv_channels;
  const int gw = state.arch.gate_width();
  const int k = state.arch.conv_kernel;
  const double beta = state.arch.beta;
  const double tau = state.arch.tau > 0 ? state.arch.tau : 1e-3;

  ad::Var y = stack_const(tp, y_norm);
  ad::Var h = tp.cmatvec_adj(A, y);  // matched-filter init, constant

  TapeOutput out;
  for (int t = 0; t < state.arch.layers; ++t) {
    const auto& layer = state.layers[t];

    ad::Var h_gcn;
    ad::Var u;
    ad::Var w2;  // diagonal of W(u)
    if (variant == Variant::kVrNet) {
      GcnTapeOut g = gcn_tape(tp, state, bind, layer, h, n, tau);
      h_gcn = g.h_gcn;
      u = g.u;
      out.u_soft = g.u;
      out.u_logits = g.logits;
      // Gate: channels [Re, Im, u].
      ad::Var gx = tp.concat({tp.slice(h_gcn, 0, n), tp.slice(h_gcn, n, n), u});
      ad::Var gfeat = conv_tape(tp, bind, layer.gate.conv_in, gx, 3, gw, k, n);
      ad::Var r1 = conv_tape(tp, bind, layer.gate.res1_b,
                             tp.relu(conv_tape(tp, bind, layer.gate.res1_a, gfeat, gw, gw, k, n)),
                             gw, gw, k, n);
      gfeat = tp.add(gfeat, r1);
      ad::Var r2 = conv_tape(tp, bind, layer.gate.res2_b,
                             tp.relu(conv_tape(tp, bind, layer.gate.res2_a, gfeat, gw, gw, k, n)),
                             gw, gw, k, n);
      gfeat = tp.add(gfeat, r2);
      ad::Var m = tp.sigmoid(conv_tape(tp, bind, layer.gate.conv_out, gfeat, gw, 1, k, n));
      h_gcn = tp.cmul_real(h_gcn, m);
      w2 = tp.adds(tp.muls(u, -beta), 1.0 + beta);  // 1 + beta (1 - u)
    } else {
      h_gcn = h;
    }

    ad::Var hidden = tp.relu(conv_tape(tp, bind, layer.prox_conv1, h_gcn, 2, c, k, n));
    ad::Var z = conv_tape(tp, bind, layer.prox_conv2, hidden, c, 2, k, n);

    ad::Var mu = tp.softplus(bind.leaf[layer.mu_raw]);
    ad::Var residual = tp.sub(tp.cmatvec(A, h), y);
    ad::Var grad_fidelity = tp.cmatvec_adj(A, residual);
    ad::Var diff = tp.sub(h, z);
    ad::Var weighted = variant == Variant::kVrNet ? tp.cmul_real(diff, w2) : diff;
    ad::Var bracket = tp.add(grad_fidelity, tp.smul(mu, weighted));
    h = tp.sub(h, tp.smul(bind.leaf[layer.gamma], bracket));
  }

  out.h_hat = h;
  return out;
}

ad::Var loss_tape(ad::Tape& tp, const TapeOutput& out, const CVec& h_norm, const RVec& u_true,
                  double alpha, Variant variant) {
  ad::Var h_true = stack_const(tp, h_norm);
  ad::Var diff = tp.sub(out.h_hat, h_true);
  const double denom = h_norm.squaredNorm();
  require(denom > 0.0, "loss_tape: zero true channel");
  ad::Var nmse = tp.muls(tp.dot(diff, diff), 1.0 / denom);
  if (variant == Variant::kAblation || alpha == 0.0) {
    return variant == Variant::kAblation ? nmse : tp.muls(nmse, 1.0 - alpha);
  }
  // Stable BCE from logits: mean(softplus(x) - u .* x).
  ad::Var u_const = tp.constant(u_true);
  ad::Var bce = tp.muls(
      tp.sum(tp.sub(tp.softplus(out.u_logits), tp.mul(u_const, out.u_logits))),
      1.0 / static_cast<double>(u_true.size()));
  return tp.add(tp.muls(nmse, 1.0 - alpha), tp.muls(bce, alpha));
}

LossParts joint_loss(const CVec& h_hat, const CVec& h, const RVec& u_soft, const RVec& u_true,
                     double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "joint_loss: alpha must lie in [0, 1]");
  LossParts parts;
  parts.nmse = metrics::nmse(h_hat, h);
  if (u_soft.size() > 0) {
    require(u_soft.size() == u_true.size(), "joint_loss: mask length mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < u_soft.size(); ++i) {
      const double p = std::clamp(u_soft[i], 1e-12, 1.0 - 1e-12);
      acc -= u_true[i] * std::log(p) + (1.0 - u_true[i]) * std::log1p(-p);
    }
    parts.bce = acc / static_cast<double>(u_soft.size());
    parts.sdr = metrics::sdr(metrics::harden(u_soft), u_true);
  } else {
    require(alpha == 0.0, "joint_loss: VR term weighted but no soft mask given");
  }
  parts.loss = (1.0 - alpha) * parts.nmse + alpha * parts.bce;
  return parts;
}

}  // namespace xlvr::net
