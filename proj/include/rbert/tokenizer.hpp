#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/labels.hpp"
#include "rbert/semeval.hpp"
#include "rbert/vocab.hpp"

namespace rbert {

// Tokenizer output: ids padded to max_len, 0/1 attention mask (padding is
// a suffix), inclusive subword ranges for the two entities (markers
// excluded), and the class index of the gold label.
struct EncodedExample {
  int instance_id = 0;
  std::vector<int> input_ids;
  std::vector<int> attention_mask;
  std::pair<int, int> e1_range;  // (i, j)
  std::pair<int, int> e2_range;  // (k, m)
  int label_index = 0;
  bool has_markers = true;
};

// Greedy longest-match-first WordPiece decomposition. Word-internal pieces
// carry the "##" prefix in the vocabulary. A word with no decomposition
// maps to the single [UNK] id.
inline std::vector<int> wordpiece(const std::string& word, const Vocab& vocab) {
  if (word.empty()) throw data_error("wordpiece: empty word");
  std::vector<int> out;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    int found = -1;
    while (end > start) {
      std::string piece = word.substr(start, end - start);
      if (start > 0) piece = "##" + piece;
      int id = vocab.id(piece);
      if (id >= 0) {
        found = id;
        break;
      }
      --end;
    }
    if (found < 0) return {vocab.unk_id()};
    out.push_back(found);
    start = end;
  }
  return out;
}

// Builds the marked token sequence
//   [CLS] pre $ e1-words $ mid # e2-words # tail
// (markers by entity identity, `$` always wraps e1 even when e2 comes
// first in the sentence), subword-tokenizes it, and pads to max_len.
// Truncation drops tokens from the tail; an example whose markers or
// entity subwords would be cut is rejected.
inline EncodedExample encode(const RelationInstance& inst, const Vocab& vocab,
                             int max_len, const LabelSpace& space,
                             bool with_markers = true) {
  if (max_len < 8) throw data_error("encode: max_len must be >= 8");
  struct Unit {
    int id;
    int kind;  // 0 plain/marker, 1 e1 subword, 2 e2 subword
  };
  std::vector<Unit> units;
  units.push_back({vocab.cls_id(), 0});
  int n_words = static_cast<int>(inst.sentence.size());
  auto in_span = [](int w, std::pair<int, int> s) {
    return w >= s.first && w <= s.second;
  };
  std::vector<int> marker_positions;
  for (int w = 0; w < n_words; ++w) {
    if (with_markers && w == inst.e1_span.first) {
      marker_positions.push_back(static_cast<int>(units.size()));
      units.push_back({vocab.e1_marker_id(), 0});
    }
    if (with_markers && w == inst.e2_span.first) {
      marker_positions.push_back(static_cast<int>(units.size()));
      units.push_back({vocab.e2_marker_id(), 0});
    }
    int kind = in_span(w, inst.e1_span) ? 1 : in_span(w, inst.e2_span) ? 2 : 0;
    for (int id : wordpiece(to_lower(inst.sentence[static_cast<std::size_t>(w)]),
                            vocab)) {
      units.push_back({id, kind});
    }
    if (with_markers && w == inst.e1_span.second) {
      marker_positions.push_back(static_cast<int>(units.size()));
      units.push_back({vocab.e1_marker_id(), 0});
    }
    if (with_markers && w == inst.e2_span.second) {
      marker_positions.push_back(static_cast<int>(units.size()));
      units.push_back({vocab.e2_marker_id(), 0});
    }
  }

  EncodedExample ex;
  ex.instance_id = inst.id;
  ex.has_markers = with_markers;
  ex.label_index = space.index_of(inst.label);
  ex.e1_range = {-1, -1};
  ex.e2_range = {-1, -1};
  for (int t = 0; t < static_cast<int>(units.size()); ++t) {
    int kind = units[static_cast<std::size_t>(t)].kind;
    if (kind == 1) {
      if (ex.e1_range.first < 0) ex.e1_range.first = t;
      ex.e1_range.second = t;
    } else if (kind == 2) {
      if (ex.e2_range.first < 0) ex.e2_range.first = t;
      ex.e2_range.second = t;
    }
  }
  if (ex.e1_range.first < 0 || ex.e2_range.first < 0) {
    throw data_error("encode: instance " + std::to_string(inst.id) +
                     " has an empty entity span");
  }

  int real_len = static_cast<int>(units.size());
  if (real_len > max_len) {
    int keep = max_len;
    if (ex.e1_range.second >= keep || ex.e2_range.second >= keep) {
      throw data_error("encode: truncation would cut an entity of instance " +
                       std::to_string(inst.id));
    }
    for (int mp : marker_positions) {
      if (mp >= keep) {
        throw data_error("encode: truncation would cut a marker of instance " +
                         std::to_string(inst.id));
      }
    }
    units.resize(static_cast<std::size_t>(keep));
    real_len = keep;
  }
  ex.input_ids.reserve(static_cast<std::size_t>(max_len));
  for (const Unit& u : units) ex.input_ids.push_back(u.id);
  ex.attention_mask.assign(static_cast<std::size_t>(real_len), 1);
  ex.input_ids.resize(static_cast<std::size_t>(max_len), vocab.pad_id());
  ex.attention_mask.resize(static_cast<std::size_t>(max_len), 0);
  return ex;
}

// A rectangular batch of encodings sharing one max_len.
struct Batch {
  int size = 0;
  int seq_len = 0;
  bool has_markers = true;
  std::vector<int> instance_ids;
  std::vector<std::vector<int>> input_ids;
  std::vector<std::vector<int>> attention_mask;
  std::vector<std::pair<int, int>> e1_range;
  std::vector<std::pair<int, int>> e2_range;
  std::vector<int> labels;
};

inline Batch pad_batch(const std::vector<EncodedExample>& examples) {
  if (examples.empty()) throw data_error("pad_batch: empty example list");
  Batch b;
  b.size = static_cast<int>(examples.size());
  b.seq_len = static_cast<int>(examples.front().input_ids.size());
  b.has_markers = examples.front().has_markers;
  for (const auto& ex : examples) {
    if (static_cast<int>(ex.input_ids.size()) != b.seq_len) {
      throw data_error("pad_batch: examples encoded with different max_len");
    }
    if (ex.has_markers != b.has_markers) {
      throw data_error("pad_batch: mixed marker modes in one batch");
    }
    b.instance_ids.push_back(ex.instance_id);
    b.input_ids.push_back(ex.input_ids);
    b.attention_mask.push_back(ex.attention_mask);
    b.e1_range.push_back(ex.e1_range);
    b.e2_range.push_back(ex.e2_range);
    b.labels.push_back(ex.label_index);
  }
  return b;
}

}  // namespace rbert
