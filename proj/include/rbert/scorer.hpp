#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/labels.hpp"
#include "rbert/semeval.hpp"

namespace rbert {

// Official SemEval-2010 Task 8 metric: macro-averaged F1 over the relation
// families, excluding Other, with directionality taken into account. A
// prediction of the right family in the wrong direction counts toward
// predicted and actual totals but never as exact-correct.
struct FamilyScore {
  std::string family;
  long exact_correct = 0;
  long predicted = 0;  // predicted family, either direction
  long actual = 0;     // gold family, either direction
  double precision = 0, recall = 0, f1 = 0;  // percentages
};

struct ScoreResult {
  double macro_f1 = 0;  // percent
  std::vector<FamilyScore> per_family;
  long total = 0;
  long other_actual = 0;
  long other_predicted = 0;
};

inline ScoreResult score(
    const std::vector<std::pair<int, DirectionalLabel>>& gold,
    const std::vector<std::pair<int, DirectionalLabel>>& pred) {
  std::map<int, DirectionalLabel> pred_by_id;
  for (const auto& [id, label] : pred) {
    if (!pred_by_id.emplace(id, label).second) {
      throw data_error("score: duplicate prediction id " + std::to_string(id));
    }
  }
  if (pred_by_id.size() != gold.size()) {
    throw data_error("score: gold and prediction id sets differ in size");
  }
  std::map<std::string, FamilyScore> fam;
  ScoreResult res;
  std::map<int, bool> gold_seen;
  for (const auto& [id, g] : gold) {
    if (!gold_seen.emplace(id, true).second) {
      throw data_error("score: duplicate gold id " + std::to_string(id));
    }
    auto it = pred_by_id.find(id);
    if (it == pred_by_id.end()) {
      throw data_error("score: missing prediction for id " +
                       std::to_string(id));
    }
    const DirectionalLabel& p = it->second;
    ++res.total;
    if (g.is_other()) {
      ++res.other_actual;
    } else {
      FamilyScore& f = fam[g.family];
      f.family = g.family;
      ++f.actual;
    }
    if (p.is_other()) {
      ++res.other_predicted;
    } else {
      FamilyScore& f = fam[p.family];
      f.family = p.family;
      ++f.predicted;
      if (p == g) ++f.exact_correct;
    }
  }
  double sum_f1 = 0;
  long considered = 0;
  for (auto& [name, f] : fam) {
    double P = f.predicted > 0
                   ? static_cast<double>(f.exact_correct) / f.predicted
                   : 0.0;
    double R = f.actual > 0 ? static_cast<double>(f.exact_correct) / f.actual
                            : 0.0;
    double F = (P + R) > 0 ? 2 * P * R / (P + R) : 0.0;
    f.precision = 100 * P;
    f.recall = 100 * R;
    f.f1 = 100 * F;
    sum_f1 += f.f1;
    ++considered;
    res.per_family.push_back(f);
  }
  if (considered == 0) {
    throw data_error("score: no relation family appears in gold or pred");
  }
  res.macro_f1 = sum_f1 / considered;
  return res;
}

// Two decimals, round half away from zero.
inline std::string format_2dp(double x) {
  double r = std::round(x * 100.0) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", r);
  return buf;
}

inline std::string render_report(const ScoreResult& res) {
  std::ostringstream out;
  out << "Family                 P       R       F1\n";
  for (const auto& f : res.per_family) {
    out << f.family;
    for (std::size_t i = f.family.size(); i < 20; ++i) out << ' ';
    out << "  " << format_2dp(f.precision) << "  " << format_2dp(f.recall)
        << "  " << format_2dp(f.f1) << "\n";
  }
  out << "\nFamilies absent from both gold and predictions are excluded "
         "from the macro average.\n";
  out << "Macro-averaged F1 (9-way directional, Other excluded): "
      << format_2dp(res.macro_f1) << "\n";
  return out.str();
}

inline std::string score_files(const std::string& gold_path,
                               const std::string& pred_path) {
  auto read = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  auto gold = parse_predictions(read(gold_path));
  auto pred = parse_predictions(read(pred_path));
  if (gold.empty() || pred.empty()) {
    throw data_error("score: empty gold or prediction file");
  }
  return render_report(score(gold, pred));
}

}  // namespace rbert
