#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/tensor.hpp"

namespace rbert {

// A trainable tensor together with its gradient and Adam moments.
// Shared parameters (W1 = W2 in the classification head) are represented
// by a single Parameter referenced from both use sites.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m1;  // first moment
  Tensor m2;  // second moment

  void init_shape(std::vector<int> shape) {
    value = Tensor::zeros(shape);
    grad = Tensor::zeros(shape);
    m1 = Tensor::zeros(shape);
    m2 = Tensor::zeros(std::move(shape));
  }

  void init_zero(std::string n, std::vector<int> shape) {
    name = std::move(n);
    init_shape(std::move(shape));
  }

  // Glorot uniform over +-sqrt(6/(fan_in+fan_out)).
  void init_xavier(std::string n, std::vector<int> shape, Rng& rng) {
    name = std::move(n);
    init_shape(shape);
    int fan_out = shape[0];
    int fan_in = shape.size() > 1 ? shape[1] : shape[0];
    Real bound = std::sqrt(Real{6} / (fan_in + fan_out));
    for (Real& x : value.v) x = rng.uniform(-bound, bound);
  }

  void init_const(std::string n, std::vector<int> shape, Real c) {
    name = std::move(n);
    init_shape(std::move(shape));
    value.fill(c);
  }
};

struct AdamConfig {
  Real learning_rate = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

// Standard Adam with bias correction; zeroes gradients afterward.
// `step` is 1-based.
inline void adam_step(std::span<Parameter* const> params, const AdamConfig& c,
                      long step) {
  if (c.learning_rate <= 0) throw data_error("adam: learning_rate must be > 0");
  Real bc1 = Real{1} - std::pow(c.beta1, static_cast<Real>(step));
  Real bc2 = Real{1} - std::pow(c.beta2, static_cast<Real>(step));
  for (Parameter* p : params) {
    std::size_t n = p->value.v.size();
    for (std::size_t i = 0; i < n; ++i) {
      Real g = p->grad.v[i];
      p->m1.v[i] = c.beta1 * p->m1.v[i] + (Real{1} - c.beta1) * g;
      p->m2.v[i] = c.beta2 * p->m2.v[i] + (Real{1} - c.beta2) * g * g;
      Real mhat = p->m1.v[i] / bc1;
      Real vhat = p->m2.v[i] / bc2;
      p->value.v[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
      p->grad.v[i] = 0;
    }
  }
}

// ---- matmul kernels (row-major, accumulating) ----

// C[n x m] += A[n x k] * B[k x m]
inline void matmul_nn_acc(const Real* A, const Real* B, Real* C, int n, int k,
                          int m) {
  for (int i = 0; i < n; ++i) {
    const Real* a = A + static_cast<std::size_t>(i) * k;
    Real* c = C + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      Real ap = a[p];
      if (ap == 0) continue;
      const Real* b = B + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) c[j] += ap * b[j];
    }
  }
}

// C[n x m] += A[n x k] * B[m x k]^T
inline void matmul_nt_acc(const Real* A, const Real* B, Real* C, int n, int k,
                          int m) {
  for (int i = 0; i < n; ++i) {
    const Real* a = A + static_cast<std::size_t>(i) * k;
    Real* c = C + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const Real* b = B + static_cast<std::size_t>(j) * k;
      Real s = 0;
      for (int p = 0; p < k; ++p) s += a[p] * b[p];
      c[j] += s;
    }
  }
}

// C[n x m] += A[k x n]^T * B[k x m]
inline void matmul_tn_acc(const Real* A, const Real* B, Real* C, int n, int k,
                          int m) {
  for (int p = 0; p < k; ++p) {
    const Real* a = A + static_cast<std::size_t>(p) * n;
    const Real* b = B + static_cast<std::size_t>(p) * m;
    for (int i = 0; i < n; ++i) {
      Real ai = a[i];
      if (ai == 0) continue;
      Real* c = C + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) c[j] += ai * b[j];
    }
  }
}

// ---- linear layer: y = x W^T + b, x is [n x p], W is [q x p], b is [q] ----

inline Tensor linear_forward(const Tensor& x, const Parameter& W,
                             const Parameter& b) {
  int n = x.rows(), p = x.cols();
  int q = W.value.rows();
  if (W.value.cols() != p || b.value.size() != q) {
    throw data_error("linear_forward: shape mismatch");
  }
  Tensor y = Tensor::zeros({n, q});
  matmul_nt_acc(x.data(), W.value.data(), y.data(), n, p, q);
  for (int i = 0; i < n; ++i) {
    Real* yr = y.row(i);
    for (int j = 0; j < q; ++j) yr[j] += b.value.v[j];
  }
  return y;
}

// Accumulates into W.grad, b.grad and dx (dx must be [n x p], zero or
// pre-accumulated).
inline void linear_backward(const Tensor& x, const Tensor& dy, Parameter& W,
                            Parameter& b, Tensor& dx) {
  int n = x.rows(), p = x.cols(), q = W.value.rows();
  matmul_nn_acc(dy.data(), W.value.data(), dx.data(), n, q, p);
  matmul_tn_acc(dy.data(), x.data(), W.grad.data(), q, n, p);
  for (int i = 0; i < n; ++i) {
    const Real* d = dy.row(i);
    for (int j = 0; j < q; ++j) b.grad.v[j] += d[j];
  }
}

// ---- layer normalization over the last dimension ----

constexpr Real kLayerNormEps = 1e-5;

struct LayerNormCache {
  Tensor xhat;                  // normalized input
  std::vector<Real> inv_std;    // per row
};

inline Tensor layernorm_forward(const Tensor& x, const Parameter& gamma,
                                const Parameter& beta, LayerNormCache* cache) {
  int n = x.rows(), d = x.cols();
  Tensor y = Tensor::zeros({n, d});
  Tensor xhat = Tensor::zeros({n, d});
  std::vector<Real> inv_std(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Real* xr = x.row(i);
    Real mu = 0;
    for (int j = 0; j < d; ++j) mu += xr[j];
    mu /= d;
    Real var = 0;
    for (int j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= d;
    Real is = Real{1} / std::sqrt(var + kLayerNormEps);
    inv_std[static_cast<std::size_t>(i)] = is;
    Real* hr = xhat.row(i);
    Real* yr = y.row(i);
    for (int j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mu) * is;
      yr[j] = gamma.value.v[j] * hr[j] + beta.value.v[j];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

inline void layernorm_backward(const Tensor& dy, const LayerNormCache& cache,
                               Parameter& gamma, Parameter& beta, Tensor& dx) {
  int n = dy.rows(), d = dy.cols();
  for (int i = 0; i < n; ++i) {
    const Real* dr = dy.row(i);
    const Real* hr = cache.xhat.row(i);
    Real is = cache.inv_std[static_cast<std::size_t>(i)];
    Real sum_dh = 0, sum_dh_h = 0;
    for (int j = 0; j < d; ++j) {
      Real dh = dr[j] * gamma.value.v[j];
      sum_dh += dh;
      sum_dh_h += dh * hr[j];
      gamma.grad.v[j] += dr[j] * hr[j];
      beta.grad.v[j] += dr[j];
    }
    Real* dxr = dx.row(i);
    for (int j = 0; j < d; ++j) {
      Real dh = dr[j] * gamma.value.v[j];
      dxr[j] += is * (dh - sum_dh / d - hr[j] * sum_dh_h / d);
    }
  }
}

// ---- activations ----

inline Real gelu(Real x) {
  return Real{0.5} * x * (Real{1} + std::erf(x * Real{0.7071067811865475}));
}

inline Real gelu_grad(Real x) {
  constexpr Real inv_sqrt2 = 0.7071067811865475;
  constexpr Real inv_sqrt2pi = 0.3989422804014327;
  return Real{0.5} * (Real{1} + std::erf(x * inv_sqrt2)) +
         x * inv_sqrt2pi * std::exp(Real{-0.5} * x * x);
}

// ---- softmax + cross entropy ----

inline void softmax_row(const Real* in, Real* out, int n) {
  Real mx = in[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, in[j]);
  Real sum = 0;
  for (int j = 0; j < n; ++j) {
    out[j] = std::exp(in[j] - mx);
    sum += out[j];
  }
  for (int j = 0; j < n; ++j) out[j] /= sum;
}

inline Tensor softmax(const Tensor& logits) {
  Tensor p = Tensor::zeros({logits.rows(), logits.cols()});
  for (int i = 0; i < logits.rows(); ++i) {
    softmax_row(logits.row(i), p.row(i), logits.cols());
  }
  return p;
}

// loss = mean over rows of -log p[target]; grad = (p - onehot) / n.
inline std::pair<Real, Tensor> softmax_cross_entropy(
    const Tensor& logits, std::span<const int> targets) {
  int n = logits.rows(), L = logits.cols();
  if (static_cast<int>(targets.size()) != n) {
    throw data_error("softmax_cross_entropy: target count mismatch");
  }
  Tensor grad = Tensor::zeros({n, L});
  Real loss = 0;
  for (int i = 0; i < n; ++i) {
    int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= L) {
      throw data_error("softmax_cross_entropy: target out of range");
    }
    softmax_row(logits.row(i), grad.row(i), L);
    Real pt = grad.at(i, t);
    loss += -std::log(std::max(pt, Real{1e-300}));
    grad.at(i, t) -= Real{1};
    Real* gr = grad.row(i);
    for (int j = 0; j < L; ++j) gr[j] /= n;
  }
  return {loss / n, std::move(grad)};
}

// ---- inverted dropout ----

// In train mode zeroes each element with probability `rate` and scales
// survivors by 1/(1-rate); eval mode is the identity. `mask_out`, when
// given, receives the per-element multiplier for the backward pass.
inline Tensor dropout_forward(const Tensor& x, Real rate, bool train, Rng* rng,
                              Tensor* mask_out) {
  Tensor y = x;
  if (mask_out) {
    *mask_out = Tensor::zeros(x.shape);
    mask_out->fill(Real{1});
  }
  if (!train || rate <= 0) return y;
  Real scale = Real{1} / (Real{1} - rate);
  for (std::size_t i = 0; i < y.v.size(); ++i) {
    if (rng->uniform() < rate) {
      y.v[i] = 0;
      if (mask_out) mask_out->v[i] = 0;
    } else {
      y.v[i] *= scale;
      if (mask_out) mask_out->v[i] = scale;
    }
  }
  return y;
}

inline Tensor dropout_backward(const Tensor& dy, const Tensor& mask) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask.v[i];
  return dx;
}

}  // namespace rbert
