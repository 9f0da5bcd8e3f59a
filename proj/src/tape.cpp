#include "xlvr/tape.hpp"

#include <cmath>

namespace xlvr::ad {

Var Tape::push(Arr v, bool requires_grad) {
  vals_.push_back(std::move(v));
  grads_.emplace_back();
  requires_.push_back(requires_grad ? 1 : 0);
  return Var{static_cast<int>(vals_.size()) - 1};
}

Var Tape::input(Arr v) { return push(std::move(v), true); }
Var Tape::constant(Arr v) { return push(std::move(v), false); }
Var Tape::constant_scalar(double v) { return constant(Arr::Constant(1, v)); }

Arr& Tape::g(int id) {
  if (grads_[id].size() == 0) grads_[id] = Arr::Zero(vals_[id].size());
  return grads_[id];
}

Arr Tape::grad_of(Var v) const {
  if (grads_[v.id].size() == 0) return Arr::Zero(vals_[v.id].size());
  return grads_[v.id];
}

void Tape::reset() {
  vals_.clear();
  grads_.clear();
  requires_.clear();
  backops_.clear();
}

void Tape::backward(Var f) {
  require(vals_[f.id].size() == 1, "backward: target must be a scalar node");
  g(f.id)[0] = 1.0;
  for (auto it = backops_.rbegin(); it != backops_.rend(); ++it) (*it)(*this);
}

namespace {
inline bool has_grad(const std::vector<Arr>& grads, int id) { return grads[id].size() != 0; }
}  // namespace

Var Tape::add(Var a, Var b) {
  Var out = push(vals_[a.id] + vals_[b.id], req(a) || req(b));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      if (t.requires_[a.id]) t.g(a.id) += go;
      if (t.requires_[b.id]) t.g(b.id) += go;
    });
  return out;
}

Var Tape::sub(Var a, Var b) {
  Var out = push(vals_[a.id] - vals_[b.id], req(a) || req(b));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      if (t.requires_[a.id]) t.g(a.id) += go;
      if (t.requires_[b.id]) t.g(b.id) -= go;
    });
  return out;
}

Var Tape::mul(Var a, Var b) {
  Var out = push(vals_[a.id] * vals_[b.id], req(a) || req(b));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      if (t.requires_[a.id]) t.g(a.id) += go * t.vals_[b.id];
      if (t.requires_[b.id]) t.g(b.id) += go * t.vals_[a.id];
    });
  return out;
}

Var Tape::div(Var a, Var b) {
  Var out = push(vals_[a.id] / vals_[b.id], req(a) || req(b));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      if (t.requires_[a.id]) t.g(a.id) += go / t.vals_[b.id];
      if (t.requires_[b.id]) t.g(b.id) -= go * t.vals_[out.id] / t.vals_[b.id];
    });
  return out;
}

Var Tape::neg(Var a) { return muls(a, -1.0); }

Var Tape::adds(Var a, double c) {
  Var out = push(vals_[a.id] + c, req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id];
    });
  return out;
}

Var Tape::muls(Var a, double c) {
  Var out = push(vals_[a.id] * c, req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id] * c;
    });
  return out;
}

Var Tape::smul(Var s, Var a) {
  require(vals_[s.id].size() == 1, "smul: s must be scalar");
  Var out = push(vals_[a.id] * vals_[s.id][0], req(a) || req(s));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      if (t.requires_[a.id]) t.g(a.id) += go * t.vals_[s.id][0];
      if (t.requires_[s.id]) t.g(s.id)[0] += (go * t.vals_[a.id]).sum();
    });
  return out;
}

Var Tape::ssub(Var a, Var s) {
  require(vals_[s.id].size() == 1, "ssub: s must be scalar");
  Var out = push(vals_[a.id] - vals_[s.id][0], req(a) || req(s));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      if (t.requires_[a.id]) t.g(a.id) += go;
      if (t.requires_[s.id]) t.g(s.id)[0] -= go.sum();
    });
  return out;
}

Var Tape::inv(Var a) {
  Var out = push(vals_[a.id].inverse(), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) -= t.grads_[out.id] * t.vals_[out.id].square();
    });
  return out;
}

Var Tape::sqrt_(Var a) {
  Var out = push(vals_[a.id].sqrt(), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id] * 0.5 / t.vals_[out.id];
    });
  return out;
}

Var Tape::sum(Var a) {
  Var out = push(Arr::Constant(1, vals_[a.id].sum()), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id][0];
    });
  return out;
}

Var Tape::dot(Var a, Var b) {
  require(vals_[a.id].size() == vals_[b.id].size(), "dot: size mismatch");
  Var out = push(Arr::Constant(1, (vals_[a.id] * vals_[b.id]).sum()), req(a) || req(b));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const double go = t.grads_[out.id][0];
      if (t.requires_[a.id]) t.g(a.id) += go * t.vals_[b.id];
      if (t.requires_[b.id]) t.g(b.id) += go * t.vals_[a.id];
    });
  return out;
}

Var Tape::sigmoid(Var a) {
  Arr v = 1.0 / (1.0 + (-vals_[a.id]).exp());
  Var out = push(std::move(v), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& s = t.vals_[out.id];
      t.g(a.id) += t.grads_[out.id] * s * (1.0 - s);
    });
  return out;
}

Var Tape::tanh_(Var a) {
  Var out = push(vals_[a.id].tanh(), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id] * (1.0 - t.vals_[out.id].square());
    });
  return out;
}

Var Tape::relu(Var a) {
  Var out = push(vals_[a.id].max(0.0), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id] * (t.vals_[a.id] > 0.0).cast<double>();
    });
  return out;
}

Var Tape::softplus(Var a) {
  // log1p(exp(x)) with the large-x branch to avoid overflow.
  Arr v(vals_[a.id].size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = vals_[a.id][i];
    v[i] = x > 30.0 ? x : std::log1p(std::exp(x));
  }
  Var out = push(std::move(v), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id) += t.grads_[out.id] / (1.0 + (-t.vals_[a.id]).exp());
    });
  return out;
}

Var Tape::slice(Var a, int offset, int len) {
  require(offset >= 0 && offset + len <= vals_[a.id].size(), "slice: out of range");
  Var out = push(vals_[a.id].segment(offset, len), req(a));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(a.id).segment(offset, len) += t.grads_[out.id];
    });
  return out;
}

Var Tape::concat(const std::vector<Var>& parts) {
  Eigen::Index total = 0;
  bool any_req = false;
  for (Var p : parts) {
    total += vals_[p.id].size();
    any_req = any_req || req(p);
  }
  Arr v(total);
  Eigen::Index off = 0;
  for (Var p : parts) {
    v.segment(off, vals_[p.id].size()) = vals_[p.id];
    off += vals_[p.id].size();
  }
  Var out = push(std::move(v), any_req);
  if (requires_[out.id]) {
    std::vector<int> ids;
    for (Var p : parts) ids.push_back(p.id);
    backops_.push_back([out, ids](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      Eigen::Index off2 = 0;
      for (int id : ids) {
        const Eigen::Index len = t.vals_[id].size();
        if (t.requires_[id]) t.g(id) += go.segment(off2, len);
        off2 += len;
      }
    });
  }
  return out;
}

Var Tape::lincomb(const std::vector<Var>& xs, Var w, const std::vector<int>& idx) {
  require(xs.size() == idx.size(), "lincomb: term count mismatch");
  require(!xs.empty(), "lincomb: empty combination");
  const Eigen::Index n = vals_[xs[0].id].size();
  Arr v = Arr::Zero(n);
  bool any_req = req(w);
  for (size_t k = 0; k < xs.size(); ++k) {
    require(vals_[xs[k].id].size() == n, "lincomb: size mismatch");
    v += vals_[w.id][idx[k]] * vals_[xs[k].id];
    any_req = any_req || req(xs[k]);
  }
  Var out = push(std::move(v), any_req);
  if (requires_[out.id]) {
    std::vector<int> xid;
    for (Var x : xs) xid.push_back(x.id);
    backops_.push_back([out, xid, w, idx](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      for (size_t k = 0; k < xid.size(); ++k) {
        if (t.requires_[xid[k]]) t.g(xid[k]) += t.vals_[w.id][idx[k]] * go;
        if (t.requires_[w.id]) t.g(w.id)[idx[k]] += (go * t.vals_[xid[k]]).sum();
      }
    });
  }
  return out;
}

namespace {

CVec to_complex(const Arr& x) {
  const Eigen::Index n = x.size() / 2;
  CVec c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = cplx(x[i], x[n + i]);
  return c;
}

Arr to_stacked(const CVec& c) {
  Arr x(2 * c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    x[i] = c[i].real();
    x[c.size() + i] = c[i].imag();
  }
  return x;
}

}  // namespace

Var Tape::cmatvec(const CMat* A, Var x) {
  require(vals_[x.id].size() == 2 * A->cols(), "cmatvec: size mismatch");
  Var out = push(to_stacked((*A) * to_complex(vals_[x.id])), req(x));
  if (requires_[out.id])
    backops_.push_back([out, A, x](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(x.id) += to_stacked(A->adjoint() * to_complex(t.grads_[out.id]));
    });
  return out;
}

Var Tape::cmatvec_adj(const CMat* A, Var x) {
  require(vals_[x.id].size() == 2 * A->rows(), "cmatvec_adj: size mismatch");
  Var out = push(to_stacked(A->adjoint() * to_complex(vals_[x.id])), req(x));
  if (requires_[out.id])
    backops_.push_back([out, A, x](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      t.g(x.id) += to_stacked((*A) * to_complex(t.grads_[out.id]));
    });
  return out;
}

Var Tape::cmul_real(Var x2n, Var w) {
  const Eigen::Index n = vals_[w.id].size();
  require(vals_[x2n.id].size() == 2 * n, "cmul_real: size mismatch");
  Arr v(2 * n);
  v.head(n) = vals_[x2n.id].head(n) * vals_[w.id];
  v.tail(n) = vals_[x2n.id].tail(n) * vals_[w.id];
  Var out = push(std::move(v), req(x2n) || req(w));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      const Arr& xv = t.vals_[x2n.id];
      const Arr& wv = t.vals_[w.id];
      if (t.requires_[x2n.id]) {
        Arr& gx = t.g(x2n.id);
        gx.head(n) += go.head(n) * wv;
        gx.tail(n) += go.tail(n) * wv;
      }
      if (t.requires_[w.id]) t.g(w.id) += go.head(n) * xv.head(n) + go.tail(n) * xv.tail(n);
    });
  return out;
}

Var Tape::cabs(Var x2n) {
  const Eigen::Index n = vals_[x2n.id].size() / 2;
  Arr v = (vals_[x2n.id].head(n).square() + vals_[x2n.id].tail(n).square()).sqrt();
  Var out = push(std::move(v), req(x2n));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      const Arr& e = t.vals_[out.id];
      const Arr& xv = t.vals_[x2n.id];
      Arr safe = (e > 0.0).select(e, Arr::Ones(n));
      Arr scale = (e > 0.0).select(go / safe, Arr::Zero(n));
      Arr& gx = t.g(x2n.id);
      gx.head(n) += scale * xv.head(n);
      gx.tail(n) += scale * xv.tail(n);
    });
  return out;
}

Var Tape::conv1d(Var x, Var w, Var b, int in_c, int out_c, int k, int n) {
  require(k % 2 == 1, "conv1d: kernel length must be odd");
  require(vals_[x.id].size() == static_cast<Eigen::Index>(in_c) * n, "conv1d: input size");
  require(vals_[w.id].size() == static_cast<Eigen::Index>(out_c) * in_c * k, "conv1d: weight size");
  require(vals_[b.id].size() == out_c, "conv1d: bias size");
  const int half = k / 2;
  Arr v(static_cast<Eigen::Index>(out_c) * n);
  {
    const Arr& xv = vals_[x.id];
    const Arr& wv = vals_[w.id];
    const Arr& bv = vals_[b.id];
    for (int oc = 0; oc < out_c; ++oc) {
      double* op = v.data() + static_cast<Eigen::Index>(oc) * n;
      for (int pos = 0; pos < n; ++pos) op[pos] = bv[oc];
      for (int ic = 0; ic < in_c; ++ic) {
        const double* xp = xv.data() + static_cast<Eigen::Index>(ic) * n;
        const double* wp = wv.data() + (static_cast<Eigen::Index>(oc) * in_c + ic) * k;
        for (int t = 0; t < k; ++t) {
          const double wgt = wp[t];
          const int off = t - half;
          const int lo = std::max(0, -off);
          const int hi = std::min(n, n - off);
          for (int pos = lo; pos < hi; ++pos) op[pos] += wgt * xp[pos + off];
        }
      }
    }
  }
  Var out = push(std::move(v), req(x) || req(w) || req(b));
  if (requires_[out.id])
    backops_.push_back([=](Tape& t) {
      if (!has_grad(t.grads_, out.id)) return;
      const Arr& go = t.grads_[out.id];
      const Arr& xv = t.vals_[x.id];
      const Arr& wv = t.vals_[w.id];
      const bool need_x = t.requires_[x.id];
      const bool need_w = t.requires_[w.id];
      const bool need_b = t.requires_[b.id];
      Arr* gx = need_x ? &t.g(x.id) : nullptr;
      Arr* gw = need_w ? &t.g(w.id) : nullptr;
      Arr* gb = need_b ? &t.g(b.id) : nullptr;
      for (int oc = 0; oc < out_c; ++oc) {
        const double* gop = go.data() + static_cast<Eigen::Index>(oc) * n;
        if (need_b) {
          double acc = 0.0;
          for (int pos = 0; pos < n; ++pos) acc += gop[pos];
          (*gb)[oc] += acc;
        }
        for (int ic = 0; ic < in_c; ++ic) {
          const double* xp = xv.data() + static_cast<Eigen::Index>(ic) * n;
          const double* wp = wv.data() + (static_cast<Eigen::Index>(oc) * in_c + ic) * k;
          double* gxp = need_x ? gx->data() + static_cast<Eigen::Index>(ic) * n : nullptr;
          double* gwp = need_w ? gw->data() + (static_cast<Eigen::Index>(oc) * in_c + ic) * k : nullptr;
          for (int tt = 0; tt < k; ++tt) {
            const int off = tt - half;
            const int lo = std::max(0, -off);
            const int hi = std::min(n, n - off);
            if (need_w) {
              double acc = 0.0;
              for (int pos = lo; pos < hi; ++pos) acc += gop[pos] * xp[pos + off];
              gwp[tt] += acc;
            }
            if (need_x) {
              const double wgt = wp[tt];
              for (int pos = lo; pos < hi; ++pos) gxp[pos + off] += wgt * gop[pos];
            }
          }
        }
      }
    });
  return out;
}

}  // namespace xlvr::ad
