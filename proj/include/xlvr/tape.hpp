/**
 * @file tape.hpp
 * @brief Minimal reverse-mode autodiff over flat real arrays.
 *
 * The unfolded network is differentiated end to end (step sizes,
 * penalties, edge thresholds through the relaxed adjacency, GCN and
 * convolution weights). Complex vectors travel as stacked real arrays
 * [Re(0..N-1); Im(0..N-1)]; fixed complex matrices get dedicated matvec
 * nodes whose adjoint is the conjugate-transpose product.
 *
 * A tape is built per sample, consumed by one backward pass, then reset.
 * Backward closures refer to nodes by index; values stay valid because
 * the graph is immutable once recorded.
 */
#pragma once

#include <functional>
#include <vector>

#include "xlvr/common.hpp"

namespace xlvr::ad {

using Arr = Eigen::ArrayXd;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var input(Arr v);           // differentiable leaf
  Var constant(Arr v);        // non-differentiable leaf
  Var constant_scalar(double v);

  const Arr& val(Var v) const { return vals_[v.id]; }
  /// Gradient of the last backward() target; zeros if the node was unused.
  Arr grad_of(Var v) const;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var adds(Var a, double c);
  Var muls(Var a, double c);
  Var smul(Var s, Var a);   // size-1 s times vector a
  Var ssub(Var a, Var s);   // a - s, s broadcast
  Var inv(Var a);
  Var sqrt_(Var a);
  Var sum(Var a);
  Var dot(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var slice(Var a, int offset, int len);
  Var concat(const std::vector<Var>& parts);

  /// sum_k w[idx[k]] * xs[k]; all xs share one size.
  Var lincomb(const std::vector<Var>& xs, Var w, const std::vector<int>& idx);

  /// Complex y = A x; x stacked [re; im] of length 2*cols, result 2*rows.
  /// A must outlive the tape.
  Var cmatvec(const CMat* A, Var x);
  /// Complex y = A^H x; x of length 2*rows, result 2*cols.
  Var cmatvec_adj(const CMat* A, Var x);
  /// Elementwise complex-by-real product: [re .* w; im .* w].
  Var cmul_real(Var x2n, Var w);
  /// Complex modulus per entry, length n from 2n.
  Var cabs(Var x2n);

  /// 1-D convolution, channel-major layout, zero padding, odd kernel.
  /// x: in_c*n, w: out_c*in_c*k, b: out_c, result out_c*n.
  Var conv1d(Var x, Var w, Var b, int in_c, int out_c, int k, int n);

  /// Backprop from a size-1 node; accumulates into leaf gradients.
  void backward(Var f);

  void reset();
  size_t size() const { return vals_.size(); }

 private:
  Var push(Arr v, bool requires_grad);
  Arr& g(int id);  // lazily-zeroed gradient slot
  bool req(Var v) const { return requires_[v.id]; }

  std::vector<Arr> vals_;
  std::vector<Arr> grads_;
  std::vector<char> requires_;
  std::vector<std::function<void(Tape&)>> backops_;
};

}  // namespace xlvr::ad
