#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbert/checkpoint.hpp"
#include "rbert/common.hpp"
#include "rbert/encoder.hpp"
#include "rbert/nn.hpp"
#include "rbert/tensor.hpp"
#include "rbert/tokenizer.hpp"

namespace rbert {

enum class Variant { FULL, NO_SEP, NO_ENT, NO_SEP_NO_ENT };

inline bool variant_uses_markers(Variant v) {
  return v == Variant::FULL || v == Variant::NO_ENT;
}

inline bool variant_uses_entities(Variant v) {
  return v == Variant::FULL || v == Variant::NO_SEP;
}

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::FULL: return "FULL";
    case Variant::NO_SEP: return "NO_SEP";
    case Variant::NO_ENT: return "NO_ENT";
    case Variant::NO_SEP_NO_ENT: return "NO_SEP_NO_ENT";
  }
  return "FULL";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "FULL") return Variant::FULL;
  if (s == "NO_SEP") return Variant::NO_SEP;
  if (s == "NO_ENT") return Variant::NO_ENT;
  if (s == "NO_SEP_NO_ENT") return Variant::NO_SEP_NO_ENT;
  throw data_error("unknown variant: " + s);
}

struct ModelConfig {
  EncoderConfig encoder;
  int num_labels = 19;
  Real dropout = 0.1;
  Variant variant = Variant::FULL;

  void validate() const {
    encoder.validate();
    if (num_labels <= 0) throw data_error("model config: num_labels <= 0");
    if (dropout < 0 || dropout >= 1) {
      throw data_error("model config: dropout must be in [0,1)");
    }
  }
};

// Classification head. W1 and W2 of the entity projections are one shared
// storage (Went/bent); both entity paths read and accumulate through it.
struct HeadParams {
  Parameter W0, b0;      // [CLS] projection, d x d
  Parameter Went, bent;  // shared entity projection, d x d
  Parameter W3, b3;      // classifier, L x (3d or d)

  void init(const ModelConfig& cfg, Rng& rng) {
    int d = cfg.encoder.hidden;
    int in3 = variant_uses_entities(cfg.variant) ? 3 * d : d;
    W0.init_xavier("head.W0", {d, d}, rng);
    b0.init_zero("head.b0", {d});
    Went.init_xavier("head.Went", {d, d}, rng);
    bent.init_zero("head.bent", {d});
    W3.init_xavier("head.W3", {cfg.num_labels, in3}, rng);
    b3.init_zero("head.b3", {cfg.num_labels});
  }
};

// Mean of H rows start..end (inclusive).
inline Tensor entity_average(const Tensor& H, std::pair<int, int> range) {
  int n = H.rows(), d = H.cols();
  auto [start, end] = range;
  if (start < 0 || end < start || end >= n) {
    throw data_error("entity_average: range outside sequence");
  }
  Tensor avg = Tensor::zeros({d});
  for (int t = start; t <= end; ++t) {
    const Real* r = H.row(t);
    for (int j = 0; j < d; ++j) avg.v[static_cast<std::size_t>(j)] += r[j];
  }
  Real inv = Real{1} / (end - start + 1);
  for (Real& x : avg.v) x *= inv;
  return avg;
}

namespace detail {

// y = W tanh(x) + b with dropout on tanh(x) in train mode.
// Caches tanh output and dropout mask for the backward pass.
struct ProjectCache {
  Tensor tanh_x;
  Tensor dropped;
  Tensor drop_mask;
};

inline Tensor project_forward(const Tensor& x, const Parameter& W,
                              const Parameter& b, Real rate, bool train,
                              Rng* rng, ProjectCache* cache) {
  Tensor t = x;
  for (Real& v : t.v) v = std::tanh(v);
  Tensor mask;
  Tensor td = dropout_forward(t, rate, train, rng, &mask);
  Tensor row = Tensor::zeros({1, static_cast<int>(td.v.size())});
  row.v = td.v;
  Tensor y = linear_forward(row, W, b);
  y.shape = {static_cast<int>(y.v.size())};
  if (cache) {
    cache->tanh_x = std::move(t);
    cache->dropped = std::move(td);
    cache->drop_mask = std::move(mask);
  }
  return y;
}

// Returns d(loss)/dx; accumulates into W.grad / b.grad.
inline Tensor project_backward(const Tensor& dy, const ProjectCache& c,
                               Parameter& W, Parameter& b) {
  int in = static_cast<int>(c.dropped.v.size());
  int out = static_cast<int>(dy.v.size());
  Tensor dy_row = Tensor::zeros({1, out});
  dy_row.v = dy.v;
  Tensor x_row = Tensor::zeros({1, in});
  x_row.v = c.dropped.v;
  Tensor dtd = Tensor::zeros({1, in});
  linear_backward(x_row, dy_row, W, b, dtd);
  Tensor dx = Tensor::zeros({in});
  for (int j = 0; j < in; ++j) {
    Real dt = dtd.v[static_cast<std::size_t>(j)] *
              c.drop_mask.v[static_cast<std::size_t>(j)];
    Real th = c.tanh_x.v[static_cast<std::size_t>(j)];
    dx.v[static_cast<std::size_t>(j)] = dt * (Real{1} - th * th);
  }
  return dx;
}

}  // namespace detail

struct ExampleCache {
  EncoderCache enc;
  detail::ProjectCache cls, ent1, ent2;
  Tensor z;        // classifier input before dropout
  Tensor zd;       // after dropout
  Tensor z_mask;
};

// The full R-BERT model: encoder + entity-aware classification head, with
// the NO_SEP / NO_ENT / NO_SEP_NO_ENT ablation variants.
struct Model {
  ModelConfig cfg;
  EncoderParams encoder;
  HeadParams head;

  void init(const ModelConfig& c, Rng& rng) {
    c.validate();
    cfg = c;
    encoder.init(cfg.encoder, rng);
    head.init(cfg, rng);
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    encoder.collect(out);
    for (Parameter* p : {&head.W0, &head.b0, &head.Went, &head.bent, &head.W3,
                         &head.b3}) {
      out.push_back(p);
    }
    return out;
  }

  // Logits for one batch. In train mode `rng` drives dropout and `caches`
  // (when given) records what the backward pass needs. Eval mode is
  // read-only over parameters.
  Tensor forward(const Batch& batch, bool train, Rng* rng,
                 std::vector<ExampleCache>* caches) const {
    if (batch.has_markers != variant_uses_markers(cfg.variant)) {
      throw data_error("variant/encoding mismatch: variant " +
                       variant_name(cfg.variant) +
                       (batch.has_markers ? " with marked input"
                                          : " with marker-free input"));
    }
    int L = cfg.num_labels;
    int d = cfg.encoder.hidden;
    bool ent = variant_uses_entities(cfg.variant);
    Tensor logits = Tensor::zeros({batch.size, L});
    if (caches) caches->resize(static_cast<std::size_t>(batch.size));
    for (int b = 0; b < batch.size; ++b) {
      ExampleCache local;
      ExampleCache& c =
          caches ? (*caches)[static_cast<std::size_t>(b)] : local;
      const auto& ids = batch.input_ids[static_cast<std::size_t>(b)];
      const auto& mask = batch.attention_mask[static_cast<std::size_t>(b)];
      Tensor H = encoder_forward(encoder, ids, mask, &c.enc);
      Tensor h0 = Tensor::zeros({d});
      for (int j = 0; j < d; ++j) h0.v[static_cast<std::size_t>(j)] = H.at(0, j);
      Tensor h0p = detail::project_forward(h0, head.W0, head.b0, cfg.dropout,
                                           train, rng, &c.cls);
      if (ent) {
        Tensor a1 =
            entity_average(H, batch.e1_range[static_cast<std::size_t>(b)]);
        Tensor a2 =
            entity_average(H, batch.e2_range[static_cast<std::size_t>(b)]);
        Tensor h1p = detail::project_forward(a1, head.Went, head.bent,
                                             cfg.dropout, train, rng, &c.ent1);
        Tensor h2p = detail::project_forward(a2, head.Went, head.bent,
                                             cfg.dropout, train, rng, &c.ent2);
        c.z = Tensor::zeros({3 * d});
        for (int j = 0; j < d; ++j) {
          c.z.v[static_cast<std::size_t>(j)] = h0p.v[static_cast<std::size_t>(j)];
          c.z.v[static_cast<std::size_t>(d + j)] =
              h1p.v[static_cast<std::size_t>(j)];
          c.z.v[static_cast<std::size_t>(2 * d + j)] =
              h2p.v[static_cast<std::size_t>(j)];
        }
      } else {
        c.z = h0p;
      }
      c.zd = dropout_forward(c.z, cfg.dropout, train, rng, &c.z_mask);
      Tensor z_row = Tensor::zeros({1, static_cast<int>(c.zd.v.size())});
      z_row.v = c.zd.v;
      Tensor lg = linear_forward(z_row, head.W3, head.b3);
      for (int j = 0; j < L; ++j) {
        logits.at(b, j) = lg.v[static_cast<std::size_t>(j)];
      }
    }
    check_finite(logits, "model logits");
    return logits;
  }

  Tensor probabilities(const Batch& batch, bool train = false,
                       Rng* rng = nullptr) const {
    return softmax(forward(batch, train, rng, nullptr));
  }

  // Row-wise argmax; ties break toward the lowest class index.
  std::vector<int> predict(const Batch& batch) const {
    Tensor logits = forward(batch, false, nullptr, nullptr);
    std::vector<int> out;
    for (int b = 0; b < batch.size; ++b) {
      const Real* r = logits.row(b);
      int best = 0;
      for (int j = 1; j < cfg.num_labels; ++j) {
        if (r[j] > r[best]) best = j;
      }
      out.push_back(best);
    }
    return out;
  }

  // Accumulates parameter gradients given d(loss)/d(logits).
  void backward(const Batch& batch, const std::vector<ExampleCache>& caches,
                const Tensor& d_logits) {
    int d = cfg.encoder.hidden;
    bool ent = variant_uses_entities(cfg.variant);
    for (int b = 0; b < batch.size; ++b) {
      const ExampleCache& c = caches[static_cast<std::size_t>(b)];
      int zn = static_cast<int>(c.zd.v.size());
      Tensor dlg = Tensor::zeros({1, cfg.num_labels});
      for (int j = 0; j < cfg.num_labels; ++j) {
        dlg.v[static_cast<std::size_t>(j)] = d_logits.at(b, j);
      }
      Tensor z_row = Tensor::zeros({1, zn});
      z_row.v = c.zd.v;
      Tensor dzd = Tensor::zeros({1, zn});
      linear_backward(z_row, dlg, head.W3, head.b3, dzd);
      Tensor dz = Tensor::zeros({zn});
      for (int j = 0; j < zn; ++j) {
        dz.v[static_cast<std::size_t>(j)] =
            dzd.v[static_cast<std::size_t>(j)] *
            c.z_mask.v[static_cast<std::size_t>(j)];
      }
      // split into head paths
      Tensor dh0p = Tensor::zeros({d});
      for (int j = 0; j < d; ++j) {
        dh0p.v[static_cast<std::size_t>(j)] = dz.v[static_cast<std::size_t>(j)];
      }
      Tensor dH = Tensor::zeros({batch.seq_len, d});
      Tensor dh0 = detail::project_backward(dh0p, c.cls, head.W0, head.b0);
      for (int j = 0; j < d; ++j) dH.at(0, j) += dh0.v[static_cast<std::size_t>(j)];
      if (ent) {
        Tensor dh1p = Tensor::zeros({d});
        Tensor dh2p = Tensor::zeros({d});
        for (int j = 0; j < d; ++j) {
          dh1p.v[static_cast<std::size_t>(j)] =
              dz.v[static_cast<std::size_t>(d + j)];
          dh2p.v[static_cast<std::size_t>(j)] =
              dz.v[static_cast<std::size_t>(2 * d + j)];
        }
        Tensor da1 =
            detail::project_backward(dh1p, c.ent1, head.Went, head.bent);
        Tensor da2 =
            detail::project_backward(dh2p, c.ent2, head.Went, head.bent);
        auto spread = [&](const Tensor& davg, std::pair<int, int> range) {
          Real inv = Real{1} / (range.second - range.first + 1);
          for (int t = range.first; t <= range.second; ++t) {
            for (int j = 0; j < d; ++j) {
              dH.at(t, j) += davg.v[static_cast<std::size_t>(j)] * inv;
            }
          }
        };
        spread(da1, batch.e1_range[static_cast<std::size_t>(b)]);
        spread(da2, batch.e2_range[static_cast<std::size_t>(b)]);
      }
      encoder_backward(encoder, batch.input_ids[static_cast<std::size_t>(b)],
                       batch.attention_mask[static_cast<std::size_t>(b)],
                       c.enc, dH);
    }
  }

  // One forward+backward pass; returns the mean cross-entropy loss.
  Real compute_loss_and_grads(const Batch& batch, Rng& rng) {
    std::vector<ExampleCache> caches;
    Tensor logits = forward(batch, true, &rng, &caches);
    auto [loss, d_logits] = softmax_cross_entropy(logits, batch.labels);
    backward(batch, caches, d_logits);
    return loss;
  }

  void save(const std::string& path) {
    auto params = parameters();
    save_checkpoint(path, params);
  }

  void load(const std::string& path) {
    auto params = parameters();
    load_checkpoint(path, params);
  }
};

}  // namespace rbert
