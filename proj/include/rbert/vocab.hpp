#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rbert/common.hpp"

namespace rbert {

inline std::string to_lower(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

// WordPiece vocabulary. File format: one token per line, line number = id,
// word-internal continuation pieces prefixed "##". [PAD], [UNK], [CLS],
// [SEP] and the entity marker tokens `$` and `#` must all be present.
class Vocab {
 public:
  static Vocab from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    for (const auto& t : tokens) {
      if (t.empty()) throw data_error("vocab: empty token");
      if (v.ids_.count(t)) throw data_error("vocab: duplicate token " + t);
      v.ids_[t] = static_cast<int>(v.tokens_.size());
      v.tokens_.push_back(t);
    }
    v.pad_id_ = v.require("[PAD]");
    v.unk_id_ = v.require("[UNK]");
    v.cls_id_ = v.require("[CLS]");
    v.sep_id_ = v.require("[SEP]");
    v.e1_marker_id_ = v.require("$");
    v.e2_marker_id_ = v.require("#");
    return v;
  }

  static Vocab from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open vocab file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      tokens.push_back(line);
    }
    return from_tokens(tokens);
  }

  // Word-level vocabulary over a corpus: specials plus the sorted set of
  // lowercased words. Useful for from-scratch training without a published
  // WordPiece file.
  static Vocab from_corpus(const std::vector<std::string>& words) {
    std::set<std::string> uniq;
    for (const auto& w : words) {
      std::string lw = to_lower(w);
      if (lw != "$" && lw != "#" && !lw.empty()) uniq.insert(lw);
    }
    std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]",
                                       "[SEP]", "$",     "#"};
    tokens.insert(tokens.end(), uniq.begin(), uniq.end());
    return from_tokens(tokens);
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  // -1 when absent.
  int id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? -1 : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || id >= size()) throw data_error("vocab: id out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }
  int e1_marker_id() const { return e1_marker_id_; }  // `$`
  int e2_marker_id() const { return e2_marker_id_; }  // `#`

  std::string to_file_content() const {
    std::string out;
    for (const auto& t : tokens_) out += t + "\n";
    return out;
  }

 private:
  int require(const std::string& token) const {
    int i = id(token);
    if (i < 0) throw data_error("vocab: missing required token " + token);
    return i;
  }

  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
  int pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1;
  int e1_marker_id_ = -1, e2_marker_id_ = -1;
};

}  // namespace rbert
