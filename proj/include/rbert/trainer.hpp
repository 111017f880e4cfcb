#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/labels.hpp"
#include "rbert/model.hpp"
#include "rbert/nn.hpp"
#include "rbert/semeval.hpp"
#include "rbert/tokenizer.hpp"

namespace rbert {

// Training configuration. The `finetune` profile mirrors the published
// hyperparameters (batch 16, max length 128, Adam lr 2e-5, 5 epochs,
// dropout 0.1); `scratch` uses settings that actually train a small
// randomly initialized encoder.
struct TrainConfig {
  int batch_size = 16;
  int max_len = 128;
  Real learning_rate = 2e-5;
  int epochs = 5;
  Real dropout = 0.1;
  std::uint64_t seed = 42;
  Variant variant = Variant::FULL;
  int layers = 12;
  int hidden = 768;
  int heads = 12;
  int ffn = 3072;

  AdamConfig adam() const {
    AdamConfig a;
    a.learning_rate = learning_rate;
    return a;
  }

  void validate() const {
    if (batch_size <= 0 || max_len <= 0 || learning_rate <= 0 || epochs < 0 ||
        dropout < 0 || dropout >= 1 || layers <= 0 || hidden <= 0 ||
        heads <= 0 || ffn <= 0) {
      throw data_error("train config: invalid value");
    }
  }
};

inline TrainConfig profile_finetune() { return TrainConfig{}; }

inline TrainConfig profile_scratch() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.epochs = 200;
  c.layers = 2;
  c.hidden = 32;
  c.heads = 4;
  c.ffn = 128;
  c.max_len = 64;
  return c;
}

struct EpochMetrics {
  double loss = 0;
  double accuracy = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
};

inline std::vector<Batch> make_batches(const std::vector<EncodedExample>& data,
                                       const std::vector<std::size_t>& order,
                                       int batch_size) {
  std::vector<Batch> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<EncodedExample> chunk;
    for (std::size_t j = i;
         j < std::min(order.size(), i + static_cast<std::size_t>(batch_size));
         ++j) {
      chunk.push_back(data[order[j]]);
    }
    out.push_back(pad_batch(chunk));
  }
  return out;
}

// Exact-label accuracy of the model on a set of encodings.
inline double accuracy(const Model& model,
                       const std::vector<EncodedExample>& data,
                       int batch_size = 64) {
  if (data.empty()) throw data_error("accuracy: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  long correct = 0;
  for (const Batch& b : make_batches(data, order, batch_size)) {
    std::vector<int> pred = model.predict(b);
    for (int i = 0; i < b.size; ++i) {
      if (pred[static_cast<std::size_t>(i)] ==
          b.labels[static_cast<std::size_t>(i)]) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Mini-batch training: per epoch, shuffle with the seeded RNG, run
// ceil(N / batch) steps (the last partial batch is kept), Adam update after
// each step. Model must already be initialized with a compatible config.
inline TrainResult train(Model& model, const std::vector<EncodedExample>& data,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw data_error("train: empty dataset");
  for (const auto& ex : data) {
    if (ex.label_index < 0 || ex.label_index >= model.cfg.num_labels) {
      throw data_error("train: label out of range for instance " +
                       std::to_string(ex.instance_id));
    }
  }
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  auto params = model.parameters();
  AdamConfig adam = cfg.adam();
  TrainResult result;
  long step = 0;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    long batches = 0;
    for (const Batch& b : make_batches(data, order, cfg.batch_size)) {
      Real loss = model.compute_loss_and_grads(b, rng);
      if (!std::isfinite(loss)) {
        throw numeric_error("train: non-finite loss at step " +
                            std::to_string(step + 1));
      }
      adam_step(params, adam, ++step);
      loss_sum += loss;
      ++batches;
    }
    EpochMetrics m;
    m.loss = loss_sum / batches;
    m.accuracy = accuracy(model, data);
    result.epochs.push_back(m);
  }
  return result;
}

// Deterministic eval-mode predictions plus exact-label accuracy.
inline std::pair<std::vector<std::pair<int, DirectionalLabel>>, double>
evaluate(const Model& model, const std::vector<EncodedExample>& data,
         const LabelSpace& space, int batch_size = 64) {
  if (data.empty()) throw data_error("evaluate: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::pair<int, DirectionalLabel>> preds;
  long correct = 0;
  for (const Batch& b : make_batches(data, order, batch_size)) {
    std::vector<int> p = model.predict(b);
    for (int i = 0; i < b.size; ++i) {
      preds.emplace_back(b.instance_ids[static_cast<std::size_t>(i)],
                         space.label(p[static_cast<std::size_t>(i)]));
      if (p[static_cast<std::size_t>(i)] ==
          b.labels[static_cast<std::size_t>(i)]) {
        ++correct;
      }
    }
  }
  return {std::move(preds),
          static_cast<double>(correct) / static_cast<double>(data.size())};
}

// ---- synthetic entity-relation task ----
//
// Every sentence contains the full set of entity-candidate tokens in
// shuffled order, interleaved with filler words. The label is a function
// of which two candidates are marked: candidates pair up per family
// (pair[f] = ent{2f}, ent{2f+1}); marking a designated pair yields that
// family with direction given by marking order, any other marked pair is
// Other. Because the unmarked token sequence carries the same candidate
// multiset regardless of label, marker-free encodings are label-ambiguous
// by construction.

struct SyntheticTask {
  std::vector<RelationInstance> train;
  std::vector<RelationInstance> test;
  std::vector<std::string> words;  // all surface forms used
  int num_families = 0;
};

namespace detail {

inline RelationInstance make_synthetic_instance(int id, int num_families,
                                                int vocab_size,
                                                int class_index,
                                                const LabelSpace& space,
                                                Rng& rng) {
  DirectionalLabel label = space.label(class_index);
  int n_cand = 2 * num_families;
  std::vector<int> cand(static_cast<std::size_t>(n_cand));
  std::iota(cand.begin(), cand.end(), 0);
  rng.shuffle(cand);

  // choose the marked pair of candidate tokens for this label
  int tok_e1 = 0, tok_e2 = 0;
  if (label.is_other()) {
    // two candidates that are not a designated pair
    do {
      tok_e1 = static_cast<int>(rng.index(static_cast<std::size_t>(n_cand)));
      tok_e2 = static_cast<int>(rng.index(static_cast<std::size_t>(n_cand)));
    } while (tok_e1 == tok_e2 || tok_e1 / 2 == tok_e2 / 2);
  } else {
    const auto& fams = relation_families();
    int f = 0;
    while (fams[static_cast<std::size_t>(f)] != label.family) ++f;
    if (label.direction == Direction::e1_to_e2) {
      tok_e1 = 2 * f;
      tok_e2 = 2 * f + 1;
    } else {
      tok_e1 = 2 * f + 1;
      tok_e2 = 2 * f;
    }
  }

  RelationInstance inst;
  inst.id = id;
  inst.label = label;
  const int fillers = 4;
  std::vector<std::string> words;
  for (int c : cand) {
    words.push_back("ent" + std::to_string(c));
  }
  for (int k = 0; k < fillers; ++k) {
    words.insert(
        words.begin() + static_cast<long>(rng.index(words.size() + 1)),
        "w" + std::to_string(rng.index(
                  static_cast<std::size_t>(std::max(1, vocab_size)))));
  }
  words.push_back(".");
  inst.sentence = words;
  std::string e1_word = "ent" + std::to_string(tok_e1);
  std::string e2_word = "ent" + std::to_string(tok_e2);
  for (int w = 0; w < static_cast<int>(words.size()); ++w) {
    if (words[static_cast<std::size_t>(w)] == e1_word) inst.e1_span = {w, w};
    if (words[static_cast<std::size_t>(w)] == e2_word) inst.e2_span = {w, w};
  }
  return inst;
}

inline std::vector<RelationInstance> make_synthetic_split(
    int first_id, int count, int num_families, int vocab_size,
    const LabelSpace& space, Rng& rng) {
  std::vector<RelationInstance> out;
  for (int i = 0; i < count; ++i) {
    int cls = i % space.size();
    out.push_back(make_synthetic_instance(first_id + i, num_families,
                                          vocab_size, cls, space, rng));
  }
  return out;
}

}  // namespace detail

inline SyntheticTask make_synthetic_task_sized(int num_families,
                                               int vocab_size, int train_count,
                                               int test_count,
                                               std::uint64_t seed) {
  if (num_families < 2) {
    throw data_error("make_synthetic_task: num_families must be >= 2");
  }
  if (num_families > static_cast<int>(relation_families().size())) {
    throw data_error("make_synthetic_task: at most 9 families supported");
  }
  LabelSpace space(num_families);
  Rng rng(seed);
  SyntheticTask task;
  task.num_families = num_families;
  task.train = detail::make_synthetic_split(1, train_count, num_families,
                                            vocab_size, space, rng);
  task.test = detail::make_synthetic_split(train_count + 1, test_count,
                                           num_families, vocab_size, space,
                                           rng);
  for (int c = 0; c < 2 * num_families; ++c) {
    task.words.push_back("ent" + std::to_string(c));
  }
  for (int k = 0; k < std::max(1, vocab_size); ++k) {
    task.words.push_back("w" + std::to_string(k));
  }
  task.words.push_back(".");
  return task;
}

inline SyntheticTask make_synthetic_task(int num_families, int vocab_size,
                                         int examples_per_class,
                                         std::uint64_t seed) {
  int classes = 2 * num_families + 1;
  int test_per_class = std::max(1, examples_per_class / 3);
  return make_synthetic_task_sized(num_families, vocab_size,
                                   classes * examples_per_class,
                                   classes * test_per_class, seed);
}

}  // namespace rbert
