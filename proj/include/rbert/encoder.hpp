#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/nn.hpp"
#include "rbert/tensor.hpp"

namespace rbert {

struct EncoderConfig {
  int vocab_size = 0;
  int max_len = 128;
  int hidden = 32;      // d
  int layers = 2;
  int heads = 4;
  int ffn = 128;        // feed-forward inner width

  void validate() const {
    if (vocab_size <= 0 || max_len <= 0 || hidden <= 0 || layers <= 0 ||
        heads <= 0 || ffn <= 0) {
      throw data_error("encoder config: all dimensions must be positive");
    }
    if (hidden % heads != 0) {
      throw data_error("encoder config: hidden size not divisible by heads");
    }
  }
};

struct EncoderLayerParams {
  Parameter Wq, bq, Wk, bk, Wv, bv, Wo, bo;
  Parameter ln1_g, ln1_b;
  Parameter W1, b1, W2, b2;  // FFN: hidden -> ffn -> hidden
  Parameter ln2_g, ln2_b;

  void init(const std::string& prefix, const EncoderConfig& cfg, Rng& rng) {
    int d = cfg.hidden, f = cfg.ffn;
    Wq.init_xavier(prefix + ".attn.Wq", {d, d}, rng);
    bq.init_zero(prefix + ".attn.bq", {d});
    Wk.init_xavier(prefix + ".attn.Wk", {d, d}, rng);
    bk.init_zero(prefix + ".attn.bk", {d});
    Wv.init_xavier(prefix + ".attn.Wv", {d, d}, rng);
    bv.init_zero(prefix + ".attn.bv", {d});
    Wo.init_xavier(prefix + ".attn.Wo", {d, d}, rng);
    bo.init_zero(prefix + ".attn.bo", {d});
    ln1_g.init_const(prefix + ".ln1.gamma", {d}, 1);
    ln1_b.init_zero(prefix + ".ln1.beta", {d});
    W1.init_xavier(prefix + ".ffn.W1", {f, d}, rng);
    b1.init_zero(prefix + ".ffn.b1", {f});
    W2.init_xavier(prefix + ".ffn.W2", {d, f}, rng);
    b2.init_zero(prefix + ".ffn.b2", {d});
    ln2_g.init_const(prefix + ".ln2.gamma", {d}, 1);
    ln2_b.init_zero(prefix + ".ln2.beta", {d});
  }

  void collect(std::vector<Parameter*>& out) {
    for (Parameter* p : {&Wq, &bq, &Wk, &bk, &Wv, &bv, &Wo, &bo, &ln1_g,
                         &ln1_b, &W1, &b1, &W2, &b2, &ln2_g, &ln2_b}) {
      out.push_back(p);
    }
  }
};

// Post-layer-norm transformer encoder with learned token and position
// embeddings, matching the original Transformer/BERT ordering:
// x = LN(emb); per layer: x = LN(x + Attn(x)); x = LN(x + FFN(x)).
struct EncoderParams {
  EncoderConfig cfg;
  Parameter tok_emb;  // vocab x d
  Parameter pos_emb;  // max_len x d
  Parameter emb_ln_g, emb_ln_b;
  std::vector<EncoderLayerParams> layers;

  void init(const EncoderConfig& c, Rng& rng) {
    c.validate();
    cfg = c;
    tok_emb.init_xavier("enc.tok_emb", {cfg.vocab_size, cfg.hidden}, rng);
    pos_emb.init_xavier("enc.pos_emb", {cfg.max_len, cfg.hidden}, rng);
    emb_ln_g.init_const("enc.emb_ln.gamma", {cfg.hidden}, 1);
    emb_ln_b.init_zero("enc.emb_ln.beta", {cfg.hidden});
    layers.resize(static_cast<std::size_t>(cfg.layers));
    for (int l = 0; l < cfg.layers; ++l) {
      layers[static_cast<std::size_t>(l)].init(
          "enc.layer" + std::to_string(l), cfg, rng);
    }
  }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&tok_emb);
    out.push_back(&pos_emb);
    out.push_back(&emb_ln_g);
    out.push_back(&emb_ln_b);
    for (auto& l : layers) l.collect(out);
  }
};

struct AttentionCache {
  Tensor Q, K, V;      // n x d each
  Tensor probs;        // heads x n x n, flattened
  Tensor ctx;          // n x d, concatenated head outputs
};

struct EncoderLayerCache {
  Tensor x_in;         // n x d
  AttentionCache attn;
  Tensor attn_out;     // n x d, after Wo
  LayerNormCache ln1c;
  Tensor y1;           // n x d, LN1 output
  Tensor ff_pre;       // n x ffn, before activation
  Tensor ff_act;       // n x ffn
  LayerNormCache ln2c;
};

struct EncoderCache {
  Tensor emb;          // n x d, pre-LN embedding sum
  LayerNormCache emb_lnc;
  std::vector<EncoderLayerCache> layers;
  Tensor out;          // n x d
};

namespace detail {

// Scaled dot-product attention over all positions; masked key positions
// receive zero probability exactly (they are skipped in the softmax).
inline void attention_forward(const EncoderLayerParams& lp, const Tensor& x,
                              std::span<const int> mask, int heads,
                              AttentionCache& c, Tensor& out) {
  int n = x.rows(), d = x.cols();
  int dh = d / heads;
  Real scale = Real{1} / std::sqrt(static_cast<Real>(dh));
  c.Q = linear_forward(x, lp.Wq, lp.bq);
  c.K = linear_forward(x, lp.Wk, lp.bk);
  c.V = linear_forward(x, lp.Wv, lp.bv);
  c.probs = Tensor::zeros({heads, n, n});
  c.ctx = Tensor::zeros({n, d});
  std::vector<Real> scores(static_cast<std::size_t>(n));
  for (int a = 0; a < heads; ++a) {
    int off = a * dh;
    Real* P = c.probs.data() + static_cast<std::size_t>(a) * n * n;
    for (int i = 0; i < n; ++i) {
      const Real* qi = c.Q.row(i) + off;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (int j = 0; j < n; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) continue;
        const Real* kj = c.K.row(j) + off;
        Real s = 0;
        for (int t = 0; t < dh; ++t) s += qi[t] * kj[t];
        s *= scale;
        scores[static_cast<std::size_t>(j)] = s;
        mx = std::max(mx, s);
      }
      Real sum = 0;
      Real* Pi = P + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) {
          Pi[j] = 0;
          continue;
        }
        Pi[j] = std::exp(scores[static_cast<std::size_t>(j)] - mx);
        sum += Pi[j];
      }
      Real* ci = c.ctx.row(i) + off;
      for (int j = 0; j < n; ++j) {
        if (Pi[j] == 0) continue;
        Pi[j] /= sum;
        const Real* vj = c.V.row(j) + off;
        for (int t = 0; t < dh; ++t) ci[t] += Pi[j] * vj[t];
      }
    }
  }
  out = linear_forward(c.ctx, lp.Wo, lp.bo);
}

inline void attention_backward(EncoderLayerParams& lp, const Tensor& x,
                               std::span<const int> mask, int heads,
                               const AttentionCache& c, const Tensor& d_out,
                               Tensor& dx) {
  int n = x.rows(), d = x.cols();
  int dh = d / heads;
  Real scale = Real{1} / std::sqrt(static_cast<Real>(dh));
  Tensor d_ctx = Tensor::zeros({n, d});
  linear_backward(c.ctx, d_out, lp.Wo, lp.bo, d_ctx);
  Tensor dQ = Tensor::zeros({n, d});
  Tensor dK = Tensor::zeros({n, d});
  Tensor dV = Tensor::zeros({n, d});
  std::vector<Real> dP(static_cast<std::size_t>(n));
  for (int a = 0; a < heads; ++a) {
    int off = a * dh;
    const Real* P = c.probs.data() + static_cast<std::size_t>(a) * n * n;
    for (int i = 0; i < n; ++i) {
      const Real* Pi = P + static_cast<std::size_t>(i) * n;
      const Real* dci = d_ctx.row(i) + off;
      // dP and softmax backward
      Real dot = 0;
      for (int j = 0; j < n; ++j) {
        if (Pi[j] == 0) {
          dP[static_cast<std::size_t>(j)] = 0;
          continue;
        }
        const Real* vj = c.V.row(j) + off;
        Real s = 0;
        for (int t = 0; t < dh; ++t) s += dci[t] * vj[t];
        dP[static_cast<std::size_t>(j)] = s;
        dot += s * Pi[j];
      }
      Real* dqi = dQ.row(i) + off;
      const Real* qi = c.Q.row(i) + off;
      for (int j = 0; j < n; ++j) {
        if (Pi[j] == 0) continue;
        // dV from context
        Real* dvj = dV.row(j) + off;
        for (int t = 0; t < dh; ++t) dvj[t] += Pi[j] * dci[t];
        // dScore -> dQ, dK
        Real ds = Pi[j] * (dP[static_cast<std::size_t>(j)] - dot) * scale;
        if (ds == 0) continue;
        const Real* kj = c.K.row(j) + off;
        Real* dkj = dK.row(j) + off;
        for (int t = 0; t < dh; ++t) {
          dqi[t] += ds * kj[t];
          dkj[t] += ds * qi[t];
        }
      }
    }
  }
  linear_backward(x, dQ, lp.Wq, lp.bq, dx);
  linear_backward(x, dK, lp.Wk, lp.bk, dx);
  linear_backward(x, dV, lp.Wv, lp.bv, dx);
}

}  // namespace detail

// Runs the encoder over one sequence. `ids` and `mask` have equal length
// n <= max_len; mask is 1 on real tokens, 0 on padding (padding must be a
// suffix for encodings produced by the tokenizer, but the encoder itself
// only requires at least one unmasked position).
inline Tensor encoder_forward(const EncoderParams& ep, std::span<const int> ids,
                              std::span<const int> mask, EncoderCache* cache) {
  int n = static_cast<int>(ids.size());
  if (static_cast<int>(mask.size()) != n) {
    throw data_error("encoder_forward: mask length mismatch");
  }
  if (n > ep.cfg.max_len) {
    throw data_error("encoder_forward: sequence longer than max_len");
  }
  int d = ep.cfg.hidden;
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.emb = Tensor::zeros({n, d});
  for (int t = 0; t < n; ++t) {
    int id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= ep.cfg.vocab_size) {
      throw data_error("encoder_forward: token id out of vocabulary range");
    }
    const Real* te = ep.tok_emb.value.row(id);
    const Real* pe = ep.pos_emb.value.row(t);
    Real* er = c.emb.row(t);
    for (int j = 0; j < d; ++j) er[j] = te[j] + pe[j];
  }
  Tensor x = layernorm_forward(c.emb, ep.emb_ln_g, ep.emb_ln_b, &c.emb_lnc);
  c.layers.resize(ep.layers.size());
  for (std::size_t l = 0; l < ep.layers.size(); ++l) {
    const EncoderLayerParams& lp = ep.layers[l];
    EncoderLayerCache& lc = c.layers[l];
    lc.x_in = x;
    detail::attention_forward(lp, lc.x_in, mask, ep.cfg.heads, lc.attn,
                              lc.attn_out);
    Tensor r1 = lc.attn_out;
    for (std::size_t i = 0; i < r1.v.size(); ++i) r1.v[i] += lc.x_in.v[i];
    lc.y1 = layernorm_forward(r1, lp.ln1_g, lp.ln1_b, &lc.ln1c);
    lc.ff_pre = linear_forward(lc.y1, lp.W1, lp.b1);
    lc.ff_act = lc.ff_pre;
    for (Real& v : lc.ff_act.v) v = gelu(v);
    Tensor ff_out = linear_forward(lc.ff_act, lp.W2, lp.b2);
    for (std::size_t i = 0; i < ff_out.v.size(); ++i) ff_out.v[i] += lc.y1.v[i];
    x = layernorm_forward(ff_out, lp.ln2_g, lp.ln2_b, &lc.ln2c);
  }
  c.out = x;
  return x;
}

// Accumulates parameter gradients for one sequence given d(loss)/d(output).
inline void encoder_backward(EncoderParams& ep, std::span<const int> ids,
                             std::span<const int> mask, const EncoderCache& c,
                             const Tensor& d_out) {
  int n = static_cast<int>(ids.size());
  int d = ep.cfg.hidden;
  Tensor dx = d_out;
  for (std::size_t li = ep.layers.size(); li-- > 0;) {
    EncoderLayerParams& lp = ep.layers[li];
    const EncoderLayerCache& lc = c.layers[li];
    // LN2
    Tensor dr2 = Tensor::zeros({n, d});
    layernorm_backward(dx, lc.ln2c, lp.ln2_g, lp.ln2_b, dr2);
    // FFN
    Tensor dy1 = dr2;  // residual path
    Tensor d_act = Tensor::zeros({n, ep.cfg.ffn});
    linear_backward(lc.ff_act, dr2, lp.W2, lp.b2, d_act);
    for (std::size_t i = 0; i < d_act.v.size(); ++i) {
      d_act.v[i] *= gelu_grad(lc.ff_pre.v[i]);
    }
    linear_backward(lc.y1, d_act, lp.W1, lp.b1, dy1);
    // LN1
    Tensor dr1 = Tensor::zeros({n, d});
    layernorm_backward(dy1, lc.ln1c, lp.ln1_g, lp.ln1_b, dr1);
    // attention + residual
    Tensor dx_in = dr1;
    detail::attention_backward(lp, lc.x_in, mask, ep.cfg.heads, lc.attn, dr1,
                               dx_in);
    dx = std::move(dx_in);
  }
  // embedding LN, then scatter into embedding tables
  Tensor d_emb = Tensor::zeros({n, d});
  layernorm_backward(dx, c.emb_lnc, ep.emb_ln_g, ep.emb_ln_b, d_emb);
  for (int t = 0; t < n; ++t) {
    int id = ids[static_cast<std::size_t>(t)];
    Real* tg = ep.tok_emb.grad.row(id);
    Real* pg = ep.pos_emb.grad.row(t);
    const Real* dr = d_emb.row(t);
    for (int j = 0; j < d; ++j) {
      tg[j] += dr[j];
      pg[j] += dr[j];
    }
  }
}

}  // namespace rbert
