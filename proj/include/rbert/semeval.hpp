#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/labels.hpp"

namespace rbert {

// One dataset example. Spans are inclusive word-index ranges into
// `sentence` (entity tags already stripped).
struct RelationInstance {
  int id = 0;
  std::vector<std::string> sentence;
  std::pair<int, int> e1_span;
  std::pair<int, int> e2_span;
  DirectionalLabel label;
  std::string comment;  // opaque, never interpreted
};

enum class SplitFormat { train, test };

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Parses the tagged sentence of one block into tokens plus entity spans.
// Words are split on whitespace with punctuation kept attached; an entity
// tag in the middle of a whitespace token forces a token boundary there,
// so trailing punctuation after </e1> becomes its own token.
inline void parse_tagged_sentence(const std::string& raw, int block_id,
                                  int line_no,
                                  std::vector<std::string>& tokens,
                                  std::pair<int, int>& e1_span,
                                  std::pair<int, int>& e2_span) {
  auto fail = [&](const std::string& why) {
    throw parse_error("block " + std::to_string(block_id) + " (line " +
                      std::to_string(line_no) + "): " + why);
  };
  auto find_once = [&](const std::string& tag) {
    std::size_t p = raw.find(tag);
    if (p == std::string::npos) fail("missing tag " + tag);
    if (raw.find(tag, p + tag.size()) != std::string::npos) {
      fail("duplicate tag " + tag);
    }
    return p;
  };
  std::size_t o1 = find_once("<e1>"), c1 = find_once("</e1>");
  std::size_t o2 = find_once("<e2>"), c2 = find_once("</e2>");
  if (o1 >= c1 || o2 >= c2) fail("entity tags out of order");
  bool e1_first = o1 < o2;
  std::size_t first_o = e1_first ? o1 : o2, first_c = e1_first ? c1 : c2;
  std::size_t second_o = e1_first ? o2 : o1, second_c = e1_first ? c2 : c1;
  if (first_c + 5 > second_o) fail("nested or overlapping entity tags");

  struct Segment {
    std::string text;
    int kind;  // 0 plain, 1 = first entity, 2 = second entity
  };
  std::vector<Segment> segs = {
      {raw.substr(0, first_o), 0},
      {raw.substr(first_o + 4, first_c - (first_o + 4)), 1},
      {raw.substr(first_c + 5, second_o - (first_c + 5)), 0},
      {raw.substr(second_o + 4, second_c - (second_o + 4)), 2},
      {raw.substr(second_c + 5), 0}};

  tokens.clear();
  std::pair<int, int> first_span{-1, -1}, second_span{-1, -1};
  for (const auto& seg : segs) {
    auto words = detail::split_ws(seg.text);
    if (seg.kind != 0 && words.empty()) fail("empty entity text");
    int start = static_cast<int>(tokens.size());
    for (auto& w : words) tokens.push_back(std::move(w));
    int end = static_cast<int>(tokens.size()) - 1;
    if (seg.kind == 1) first_span = {start, end};
    if (seg.kind == 2) second_span = {start, end};
  }
  e1_span = e1_first ? first_span : second_span;
  e2_span = e1_first ? second_span : first_span;
}

// Parses SemEval-2010 Task 8 TXT content: blocks of
//   <id>\t"<tagged sentence>"
//   <relation label>
//   Comment: ...        (optional)
//   <blank line>
// The train and test (FULL) distributions share this layout.
inline std::vector<RelationInstance> parse_dataset(
    const std::string& content, SplitFormat /*format*/ = SplitFormat::train) {
  std::vector<RelationInstance> out;
  std::set<int> seen_ids;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string l = detail::trim(line);
    if (l.empty()) continue;
    int head_line = line_no;
    // sentence line: <id>\t"..."
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw parse_error("line " + std::to_string(line_no) +
                        ": expected <id>\\t\"sentence\"");
    }
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(line.substr(0, tab), &used);
      if (used != tab || id <= 0) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw parse_error("line " + std::to_string(line_no) +
                        ": bad instance id");
    }
    if (!seen_ids.insert(id).second) {
      throw parse_error("line " + std::to_string(line_no) +
                        ": duplicate instance id " + std::to_string(id));
    }
    std::string sent = detail::trim(line.substr(tab + 1));
    if (sent.size() < 2 || sent.front() != '"' || sent.back() != '"') {
      throw parse_error("block " + std::to_string(id) + " (line " +
                        std::to_string(line_no) + "): sentence not quoted");
    }
    sent = sent.substr(1, sent.size() - 2);

    RelationInstance inst;
    inst.id = id;
    parse_tagged_sentence(sent, id, head_line, inst.sentence, inst.e1_span,
                          inst.e2_span);

    // label line
    if (!std::getline(in, line)) {
      throw parse_error("block " + std::to_string(id) +
                        ": missing relation label line");
    }
    ++line_no;
    std::string label_str = detail::trim(line);
    if (label_str.empty()) {
      throw parse_error("block " + std::to_string(id) + " (line " +
                        std::to_string(line_no) + "): missing label line");
    }
    try {
      inst.label = parse_label(label_str);
    } catch (const parse_error& e) {
      throw parse_error("block " + std::to_string(id) + " (line " +
                        std::to_string(line_no) + "): " + e.what());
    }

    // optional comment line
    std::streampos before = in.tellg();
    if (std::getline(in, line)) {
      ++line_no;
      std::string t = detail::trim(line);
      if (t.rfind("Comment:", 0) == 0) {
        inst.comment = t;
      } else if (!t.empty()) {
        // start of the next block
        in.seekg(before);
        --line_no;
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::vector<RelationInstance> load_dataset_file(
    const std::string& path, SplitFormat format = SplitFormat::train) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format);
}

// Re-renders one instance in distribution format (tags re-inserted).
inline std::string render_block(const RelationInstance& inst) {
  std::ostringstream out;
  out << inst.id << "\t\"";
  for (int i = 0; i < static_cast<int>(inst.sentence.size()); ++i) {
    if (i > 0) out << ' ';
    if (i == inst.e1_span.first) out << "<e1>";
    if (i == inst.e2_span.first) out << "<e2>";
    out << inst.sentence[static_cast<std::size_t>(i)];
    if (i == inst.e1_span.second) out << "</e1>";
    if (i == inst.e2_span.second) out << "</e2>";
  }
  out << "\"\n" << render_label(inst.label) << "\n";
  if (!inst.comment.empty()) out << inst.comment << "\n";
  out << "\n";
  return out.str();
}

inline std::string render_dataset(const std::vector<RelationInstance>& v) {
  std::string out;
  for (const auto& inst : v) out += render_block(inst);
  return out;
}

// Prediction file: one "<id>\t<label>" line per instance, ascending id.
inline std::string write_predictions(
    std::vector<std::pair<int, DirectionalLabel>> preds) {
  std::sort(preds.begin(), preds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  int prev = -1;
  for (const auto& [id, label] : preds) {
    if (id == prev) {
      throw data_error("duplicate prediction id " + std::to_string(id));
    }
    prev = id;
    out += std::to_string(id) + "\t" + render_label(label) + "\n";
  }
  return out;
}

inline std::vector<std::pair<int, DirectionalLabel>> parse_predictions(
    const std::string& content) {
  std::vector<std::pair<int, DirectionalLabel>> out;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::size_t tab = t.find('\t');
    if (tab == std::string::npos) {
      throw parse_error("prediction line " + std::to_string(line_no) +
                        ": expected <id>\\t<label>");
    }
    int id = 0;
    try {
      id = std::stoi(t.substr(0, tab));
    } catch (const std::exception&) {
      throw parse_error("prediction line " + std::to_string(line_no) +
                        ": bad id");
    }
    out.emplace_back(id, parse_label(detail::trim(t.substr(tab + 1))));
  }
  return out;
}

}  // namespace rbert
