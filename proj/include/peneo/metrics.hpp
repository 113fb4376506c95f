#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "peneo/decoder.hpp"

namespace peneo {

struct PairF1Report {
  long true_positives = 0;
  long num_predicted = 0;
  long num_gold = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  static PairF1Report from_counts(long tp, long pred, long gold) {
    PairF1Report r;
    r.true_positives = tp;
    r.num_predicted = pred;
    r.num_gold = gold;
    if (pred == 0 && gold == 0) {
      // Nothing to extract and nothing extracted: perfect by convention.
      r.precision = r.recall = r.f1 = 1.0;
      return r;
    }
    r.precision = pred > 0 ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    r.recall = gold > 0 ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    r.f1 = (r.precision + r.recall) > 0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
  }
};

// Pair-level F1 with exact string matching. Multiset semantics: a gold pair
// is consumed by at most one identical prediction, so duplicated gold pairs
// need duplicated predictions.
inline PairF1Report pair_f1(const std::vector<std::pair<std::string, std::string>>& pred,
                            const std::vector<std::pair<std::string, std::string>>& gold) {
  std::map<std::pair<std::string, std::string>, long> gold_counts;
  for (const auto& g : gold) ++gold_counts[g];
  long tp = 0;
  for (const auto& p : pred) {
    auto it = gold_counts.find(p);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  return PairF1Report::from_counts(tp, static_cast<long>(pred.size()),
                                   static_cast<long>(gold.size()));
}

enum class Subtask { line_extraction, line_grouping };

// F1 over the sets of positive cells of the relevant heads. Line grouping
// pools the head and tail matrices into one cell set.
inline PairF1Report subtask_f1(const RelationMatrices& pred, const RelationTargets& gold,
                               Subtask which) {
  if (pred.n != gold.n) throw ConfigError("subtask_f1: size mismatch");
  std::vector<int> heads = which == Subtask::line_extraction
                               ? std::vector<int>{kLineExtract}
                               : std::vector<int>{kGroupHead, kGroupTail};
  long tp = 0, n_pred = 0, n_gold = 0;
  for (int h : heads) {
    for (int i = 0; i < pred.n; ++i) {
      for (int j = 0; j < pred.n; ++j) {
        const bool p = pred.at(h, i, j) != 0;
        const bool g = gold.at(h, i, j) != 0;
        n_pred += p;
        n_gold += g;
        tp += p && g;
      }
    }
  }
  return PairF1Report::from_counts(tp, n_pred, n_gold);
}

}  // namespace peneo
