#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "rbert/common.hpp"

namespace rbert {

// The nine SemEval-2010 Task 8 relation families, lexicographically sorted.
inline const std::vector<std::string>& relation_families() {
  static const std::vector<std::string> families = {
      "Cause-Effect",    "Component-Whole",  "Content-Container",
      "Entity-Destination", "Entity-Origin", "Instrument-Agency",
      "Member-Collection", "Message-Topic",  "Product-Producer"};
  return families;
}

enum class Direction { e1_to_e2, e2_to_e1, none };

struct DirectionalLabel {
  std::string family;  // one of relation_families(), or "Other"
  Direction direction = Direction::none;

  bool is_other() const { return family == "Other"; }

  bool operator==(const DirectionalLabel& o) const {
    return family == o.family && direction == o.direction;
  }
};

inline std::string render_label(const DirectionalLabel& l) {
  if (l.is_other()) return "Other";
  return l.family +
         (l.direction == Direction::e1_to_e2 ? "(e1,e2)" : "(e2,e1)");
}

inline DirectionalLabel parse_label(const std::string& s) {
  if (s == "Other") return {"Other", Direction::none};
  auto paren = s.find('(');
  if (paren == std::string::npos || s.back() != ')') {
    throw parse_error("unknown label string: " + s);
  }
  std::string family = s.substr(0, paren);
  std::string dir = s.substr(paren);
  const auto& fams = relation_families();
  if (std::find(fams.begin(), fams.end(), family) == fams.end()) {
    throw parse_error("unknown relation family: " + family);
  }
  DirectionalLabel l;
  l.family = family;
  if (dir == "(e1,e2)") {
    l.direction = Direction::e1_to_e2;
  } else if (dir == "(e2,e1)") {
    l.direction = Direction::e2_to_e1;
  } else {
    throw parse_error("unknown label direction: " + s);
  }
  return l;
}

// A fixed directional label space: the first `num_families` relation
// families in both directions plus Other. The full SemEval space uses all
// nine families (19 classes); synthetic tasks use a prefix. Class indices
// are assigned lexicographically by rendered label string, so they are
// stable across runs and processes.
class LabelSpace {
 public:
  explicit LabelSpace(int num_families = 9) {
    const auto& fams = relation_families();
    if (num_families < 1 || num_families > static_cast<int>(fams.size())) {
      throw data_error("LabelSpace: num_families out of range");
    }
    std::vector<std::string> rendered;
    for (int f = 0; f < num_families; ++f) {
      rendered.push_back(fams[static_cast<std::size_t>(f)] + "(e1,e2)");
      rendered.push_back(fams[static_cast<std::size_t>(f)] + "(e2,e1)");
    }
    rendered.push_back("Other");
    std::sort(rendered.begin(), rendered.end());
    for (int i = 0; i < static_cast<int>(rendered.size()); ++i) {
      labels_.push_back(parse_label(rendered[static_cast<std::size_t>(i)]));
      index_[rendered[static_cast<std::size_t>(i)]] = i;
    }
  }

  int size() const { return static_cast<int>(labels_.size()); }
  int num_families() const { return (size() - 1) / 2; }

  int index_of(const DirectionalLabel& l) const {
    auto it = index_.find(render_label(l));
    if (it == index_.end()) {
      throw data_error("label not in space: " + render_label(l));
    }
    return it->second;
  }

  const DirectionalLabel& label(int index) const {
    if (index < 0 || index >= size()) {
      throw data_error("class index out of range");
    }
    return labels_[static_cast<std::size_t>(index)];
  }

  // Families participating in this space (without Other).
  std::vector<std::string> families() const {
    std::vector<std::string> out;
    for (const auto& l : labels_) {
      if (!l.is_other() && l.direction == Direction::e1_to_e2) {
        out.push_back(l.family);
      }
    }
    return out;
  }

 private:
  std::vector<DirectionalLabel> labels_;
  std::map<std::string, int> index_;
};

inline const LabelSpace& label_space() {
  static const LabelSpace space(9);
  return space;
}

}  // namespace rbert
