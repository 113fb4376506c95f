#pragma once

#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "peneo/link_parser.hpp"
#include "peneo/metrics.hpp"
#include "peneo/tokenize.hpp"

namespace peneo {

// Which prediction heads get replaced by ground truth before parsing
// (the Table-5 style module-collaboration protocol).
struct SubstituteSet {
  bool line_extraction = false;
  bool line_grouping = false;  // both grouping heads together

  static SubstituteSet parse(const std::string& s) {
    if (s == "none" || s.empty()) return {};
    if (s == "le") return {true, false};
    if (s == "lg") return {false, true};
    if (s == "both") return {true, true};
    throw ConfigError("substitute must be one of none|le|lg|both");
  }
};

struct EvalOptions {
  SubstituteSet substitute;
  bool gold_matrices = false;  // bypass the model entirely
  int threads = 1;
  int max_tokens = kDefaultMaxTokens;
};

struct DocEval {
  std::string doc_id;
  PairF1Report pairs;
  PairF1Report line_extraction;
  PairF1Report line_grouping;
  std::vector<ParsedPair> parsed;
};

struct CorpusEval {
  PairF1Report pairs;
  PairF1Report line_extraction;
  PairF1Report line_grouping;
  std::vector<DocEval> per_doc;
};

// Produces relation scores for one tokenized document. Must be pure and
// thread-safe; evaluation may run it from several workers.
using Scorer = std::function<RelationScores(const TokenizedDoc&)>;

namespace detail {

inline void substitute_heads(const RelationTargets& targets, const SubstituteSet& sub,
                             RelationMatrices* matrices, RelationScores* scores) {
  std::vector<int> heads;
  if (sub.line_extraction) heads.push_back(kLineExtract);
  if (sub.line_grouping) {
    heads.push_back(kGroupHead);
    heads.push_back(kGroupTail);
  }
  for (int h : heads) {
    for (int i = 0; i < targets.n; ++i) {
      for (int j = 0; j < targets.n; ++j) {
        const bool on = targets.at(h, i, j) != 0;
        matrices->set(h, i, j, on ? 1 : 0);
        scores->probs.at(h, i, j, 0) = on ? 0.0f : 1.0f;
        scores->probs.at(h, i, j, 1) = on ? 1.0f : 0.0f;
      }
    }
  }
}

inline DocEval evaluate_document(const Document& doc, const Vocab& vocab, const Scorer& scorer,
                                 const EvalOptions& opts) {
  DocEval out;
  out.doc_id = doc.id;
  TokenizedDoc tok = tokenize(doc, vocab, opts.max_tokens);
  const auto gold = gold_pairs(doc);
  if (tok.size() == 0) {
    out.pairs = pair_f1({}, gold);
    out.line_extraction = PairF1Report::from_counts(0, 0, 0);
    out.line_grouping = PairF1Report::from_counts(0, 0, 0);
    return out;
  }
  RelationTargets targets = build_targets(tok, doc.entities, doc.links);

  RelationScores scores;
  RelationMatrices matrices;
  if (opts.gold_matrices) {
    matrices = targets;
    scores = scores_from_matrices(targets);
  } else {
    scores = scorer(tok);
    if (scores.n != tok.size()) {
      // Per-document scorer failure (e.g. missing external features): the
      // document is skipped and its gold pairs count as misses.
      out.pairs = pair_f1({}, gold);
      out.line_extraction = PairF1Report::from_counts(0, 0, 0);
      out.line_grouping = PairF1Report::from_counts(0, 0, 0);
      return out;
    }
    matrices = decode(scores);
  }
  out.line_extraction = subtask_f1(matrices, targets, Subtask::line_extraction);
  out.line_grouping = subtask_f1(matrices, targets, Subtask::line_grouping);
  detail::substitute_heads(targets, opts.substitute, &matrices, &scores);

  out.parsed = parse_links(build_best_maps(matrices, scores), tok);
  out.pairs = pair_f1(pair_strings(out.parsed), gold);
  return out;
}

}  // namespace detail

// Ground-truth substitution protocol for a single document.
inline PairF1Report gt_substitution_eval(const Document& doc, const Vocab& vocab,
                                         const Scorer& scorer, const SubstituteSet& substitute,
                                         int max_tokens = kDefaultMaxTokens) {
  EvalOptions opts;
  opts.substitute = substitute;
  opts.max_tokens = max_tokens;
  return detail::evaluate_document(doc, vocab, scorer, opts).pairs;
}

// Evaluates a corpus. Per-document work may run on several threads; the
// reduction order is fixed by document index, so results are deterministic.
inline CorpusEval evaluate_corpus(const std::vector<Document>& docs, const Vocab& vocab,
                                  const Scorer& scorer, const EvalOptions& opts = {}) {
  std::vector<DocEval> results(docs.size());
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || docs.size() < 2) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      results[i] = detail::evaluate_document(docs[i], vocab, scorer, opts);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= docs.size()) return;
          results[i] = detail::evaluate_document(docs[i], vocab, scorer, opts);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  CorpusEval out;
  long tp = 0, np = 0, ng = 0;
  long le_tp = 0, le_p = 0, le_g = 0;
  long lg_tp = 0, lg_p = 0, lg_g = 0;
  for (auto& r : results) {
    tp += r.pairs.true_positives;
    np += r.pairs.num_predicted;
    ng += r.pairs.num_gold;
    le_tp += r.line_extraction.true_positives;
    le_p += r.line_extraction.num_predicted;
    le_g += r.line_extraction.num_gold;
    lg_tp += r.line_grouping.true_positives;
    lg_p += r.line_grouping.num_predicted;
    lg_g += r.line_grouping.num_gold;
  }
  out.pairs = PairF1Report::from_counts(tp, np, ng);
  out.line_extraction = PairF1Report::from_counts(le_tp, le_p, le_g);
  out.line_grouping = PairF1Report::from_counts(lg_tp, lg_p, lg_g);
  out.per_doc = std::move(results);
  return out;
}

namespace detail {

inline Json f1_to_json(const PairF1Report& r) {
  return Json{{"true_positives", r.true_positives}, {"num_predicted", r.num_predicted},
              {"num_gold", r.num_gold},             {"precision", r.precision},
              {"recall", r.recall},                 {"f1", r.f1}};
}

}  // namespace detail

// Deterministic metrics report: no timestamps or timings, so identical runs
// produce identical bytes. Wall-clock data belongs in the run manifest.
inline Json metrics_report_json(const CorpusEval& eval, const std::string& config_hash,
                                std::uint64_t seed) {
  Json j;
  j["aggregate"] = Json{{"pair_f1", eval.pairs.f1},
                        {"pair", detail::f1_to_json(eval.pairs)},
                        {"line_extraction", detail::f1_to_json(eval.line_extraction)},
                        {"line_grouping", detail::f1_to_json(eval.line_grouping)}};
  j["per_doc"] = Json::array();
  for (const auto& d : eval.per_doc) {
    j["per_doc"].push_back(Json{{"doc_id", d.doc_id}, {"pair", detail::f1_to_json(d.pairs)}});
  }
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j;
}

}  // namespace peneo
