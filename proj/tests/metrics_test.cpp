#include <gtest/gtest.h>

#include "peneo/evalkit.hpp"
#include "peneo/metrics.hpp"
#include "peneo/synth.hpp"

using namespace peneo;

namespace {
using Pairs = std::vector<std::pair<std::string, std::string>>;
}

TEST(PairF1, PerfectMatch) {
  Pairs gold{{"Name:", "Alice"}, {"Address:", "12 Fox Road"}};
  PairF1Report r = pair_f1(gold, gold);
  EXPECT_EQ(r.true_positives, 2);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(PairF1, HalfMatchHandExample) {
  Pairs gold{{"Name:", "Alice"}, {"Address:", "12 Fox Road"}};
  Pairs pred{{"Name:", "Alice"}, {"Address:", "12 Fox"}};
  PairF1Report r = pair_f1(pred, gold);
  EXPECT_EQ(r.true_positives, 1);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(PairF1, EmptyConventions) {
  Pairs gold{{"k", "v"}};
  PairF1Report r = pair_f1({}, gold);
  EXPECT_DOUBLE_EQ(r.precision, 0.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.0);
  EXPECT_DOUBLE_EQ(r.f1, 0.0);

  PairF1Report r2 = pair_f1(gold, {});
  EXPECT_DOUBLE_EQ(r2.f1, 0.0);

  PairF1Report r3 = pair_f1({}, {});
  EXPECT_DOUBLE_EQ(r3.f1, 1.0);
}

TEST(PairF1, ExactStringMatchNoNormalization) {
  Pairs gold{{"Name:", "Alice"}};
  Pairs pred{{"Name:", "alice"}};
  EXPECT_EQ(pair_f1(pred, gold).true_positives, 0);
  Pairs pred2{{"Name:", "Alice "}};
  EXPECT_EQ(pair_f1(pred2, gold).true_positives, 0);
}

TEST(PairF1, MultisetSemantics) {
  Pairs gold{{"k", "v"}, {"k", "v"}};
  Pairs pred_once{{"k", "v"}};
  PairF1Report r = pair_f1(pred_once, gold);
  EXPECT_EQ(r.true_positives, 1);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);

  Pairs pred_thrice{{"k", "v"}, {"k", "v"}, {"k", "v"}};
  PairF1Report r2 = pair_f1(pred_thrice, gold);
  EXPECT_EQ(r2.true_positives, 2);
  EXPECT_DOUBLE_EQ(r2.recall, 1.0);
  EXPECT_NEAR(r2.precision, 2.0 / 3.0, 1e-12);
}

TEST(PairF1, OrderInvariance) {
  Pairs gold{{"a", "1"}, {"b", "2"}, {"c", "3"}};
  Pairs pred{{"c", "3"}, {"a", "1"}, {"x", "9"}};
  PairF1Report r1 = pair_f1(pred, gold);
  std::reverse(pred.begin(), pred.end());
  std::reverse(gold.begin(), gold.end());
  PairF1Report r2 = pair_f1(pred, gold);
  EXPECT_EQ(r1.true_positives, r2.true_positives);
  EXPECT_DOUBLE_EQ(r1.f1, r2.f1);
}

TEST(PairF1, NonMatchingPredictionLowersPrecisionOnly) {
  Pairs gold{{"a", "1"}, {"b", "2"}};
  Pairs pred{{"a", "1"}, {"b", "2"}};
  PairF1Report base = pair_f1(pred, gold);
  pred.emplace_back("junk", "junk");
  PairF1Report worse = pair_f1(pred, gold);
  EXPECT_EQ(worse.true_positives, base.true_positives);
  EXPECT_LT(worse.precision, base.precision);
  EXPECT_DOUBLE_EQ(worse.recall, base.recall);
}

TEST(PairF1, SelfMatchIsAlwaysPerfect) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Pairs xs;
    const int n = rng.range_int(0, 8);
    for (int i = 0; i < n; ++i) {
      xs.emplace_back("k" + std::to_string(rng.below(3)), "v" + std::to_string(rng.below(3)));
    }
    EXPECT_DOUBLE_EQ(pair_f1(xs, xs).f1, 1.0);
  }
}

// ---- sub-task F1 -------------------------------------------------------------

TEST(SubtaskF1, IdenticalMatricesScoreOne) {
  RelationMatrices m = RelationMatrices::zeros(4);
  m.set(kLineExtract, 0, 1, 1);
  m.set(kGroupHead, 1, 2, 1);
  m.set(kGroupTail, 2, 3, 1);
  EXPECT_DOUBLE_EQ(subtask_f1(m, m, Subtask::line_extraction).f1, 1.0);
  EXPECT_DOUBLE_EQ(subtask_f1(m, m, Subtask::line_grouping).f1, 1.0);
}

TEST(SubtaskF1, AllZeroPredictionScoresZero) {
  RelationMatrices gold = RelationMatrices::zeros(4);
  gold.set(kLineExtract, 0, 1, 1);
  RelationMatrices pred = RelationMatrices::zeros(4);
  EXPECT_DOUBLE_EQ(subtask_f1(pred, gold, Subtask::line_extraction).f1, 0.0);
}

TEST(SubtaskF1, PartialRecallHandArithmetic) {
  // one of three gold cells predicted, no false positives: P=1, R=1/3, F1=0.5
  RelationMatrices gold = RelationMatrices::zeros(5);
  gold.set(kLineExtract, 0, 0, 1);
  gold.set(kLineExtract, 1, 2, 1);
  gold.set(kLineExtract, 3, 4, 1);
  RelationMatrices pred = RelationMatrices::zeros(5);
  pred.set(kLineExtract, 1, 2, 1);
  PairF1Report r = subtask_f1(pred, gold, Subtask::line_extraction);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_NEAR(r.recall, 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(SubtaskF1, GroupingPoolsHeadAndTailCells) {
  RelationMatrices gold = RelationMatrices::zeros(4);
  gold.set(kGroupHead, 0, 1, 1);
  gold.set(kGroupTail, 2, 3, 1);
  RelationMatrices pred = RelationMatrices::zeros(4);
  pred.set(kGroupHead, 0, 1, 1);  // head correct, tail missing
  PairF1Report r = subtask_f1(pred, gold, Subtask::line_grouping);
  EXPECT_EQ(r.true_positives, 1);
  EXPECT_EQ(r.num_gold, 2);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
}

// ---- corpus evaluation ---------------------------------------------------------

TEST(EvaluateCorpus, GoldMatrixModeIsPerfect) {
  SynthSpec spec;
  spec.num_docs = 25;
  spec.multi_line_frac = 0.4;
  auto docs = generate_synthetic_corpus(spec, 15);
  Vocab vocab = Vocab::build(docs);
  EvalOptions opts;
  opts.gold_matrices = true;
  CorpusEval eval = evaluate_corpus(docs, vocab, Scorer{}, opts);
  EXPECT_DOUBLE_EQ(eval.pairs.f1, 1.0);
  EXPECT_DOUBLE_EQ(eval.line_extraction.f1, 1.0);
  EXPECT_DOUBLE_EQ(eval.line_grouping.f1, 1.0);
}

TEST(EvaluateCorpus, AggregateEqualsSumOfPerDocCounts) {
  SynthSpec spec;
  spec.num_docs = 18;
  auto docs = generate_synthetic_corpus(spec, 16);
  Vocab vocab = Vocab::build(docs);
  EvalOptions opts;
  opts.gold_matrices = true;
  CorpusEval eval = evaluate_corpus(docs, vocab, Scorer{}, opts);
  long tp = 0, np = 0, ng = 0;
  for (const auto& d : eval.per_doc) {
    tp += d.pairs.true_positives;
    np += d.pairs.num_predicted;
    ng += d.pairs.num_gold;
  }
  EXPECT_EQ(eval.pairs.true_positives, tp);
  EXPECT_EQ(eval.pairs.num_predicted, np);
  EXPECT_EQ(eval.pairs.num_gold, ng);
}

TEST(EvaluateCorpus, ThreadedReductionIsDeterministic) {
  SynthSpec spec;
  spec.num_docs = 30;
  auto docs = generate_synthetic_corpus(spec, 17);
  Vocab vocab = Vocab::build(docs);
  EvalOptions one;
  one.gold_matrices = true;
  one.threads = 1;
  EvalOptions four = one;
  four.threads = 4;
  Json a = metrics_report_json(evaluate_corpus(docs, vocab, Scorer{}, one), "h", 1);
  Json b = metrics_report_json(evaluate_corpus(docs, vocab, Scorer{}, four), "h", 1);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(EvaluateCorpus, SubstituteNoneMatchesPlainEval) {
  SynthSpec spec;
  spec.num_docs = 10;
  auto docs = generate_synthetic_corpus(spec, 18);
  Vocab vocab = Vocab::build(docs);
  // a deliberately bad scorer: uniform scores decode to all-zero matrices
  Scorer uniform_scorer = [](const TokenizedDoc& tok) {
    RelationScores s;
    s.n = tok.size();
    s.probs = Tensor::full({kNumHeads, tok.size(), tok.size(), 2}, 0.5f);
    return s;
  };
  EvalOptions none;
  CorpusEval a = evaluate_corpus(docs, vocab, uniform_scorer, none);
  EvalOptions expl;
  expl.substitute = SubstituteSet::parse("none");
  CorpusEval b = evaluate_corpus(docs, vocab, uniform_scorer, expl);
  EXPECT_EQ(metrics_report_json(a, "h", 1).dump(), metrics_report_json(b, "h", 1).dump());
  EXPECT_DOUBLE_EQ(a.pairs.f1, 0.0);  // nothing predicted, gold non-empty
}

TEST(EvaluateCorpus, SubstituteBothOnUninformativeScorerIsPerfect) {
  SynthSpec spec;
  spec.num_docs = 10;
  spec.multi_line_frac = 0.5;
  auto docs = generate_synthetic_corpus(spec, 19);
  Vocab vocab = Vocab::build(docs);
  // scorer that only gets entity linking right, via gold targets
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;
  Scorer linking_only = [&](const TokenizedDoc& tok) {
    const Document* doc = by_id.at(tok.doc_id);
    RelationTargets y = build_targets(tok, doc->entities, doc->links);
    RelationScores s;
    s.n = tok.size();
    s.probs = Tensor::full({kNumHeads, tok.size(), tok.size(), 2}, 0.5f);
    for (int i = 0; i < tok.size(); ++i) {
      for (int j = 0; j < tok.size(); ++j) {
        for (int h : {kLinkHead, kLinkTail}) {
          const bool on = y.at(h, i, j) != 0;
          s.probs.at(h, i, j, 0) = on ? 0.0f : 1.0f;
          s.probs.at(h, i, j, 1) = on ? 1.0f : 0.0f;
        }
      }
    }
    return s;
  };
  EvalOptions both;
  both.substitute = SubstituteSet::parse("both");
  CorpusEval eval = evaluate_corpus(docs, vocab, linking_only, both);
  EXPECT_DOUBLE_EQ(eval.pairs.f1, 1.0);

  EvalOptions none;
  CorpusEval base = evaluate_corpus(docs, vocab, linking_only, none);
  EXPECT_LT(base.pairs.f1, 1.0);  // without substitution the chains cannot resolve
}

TEST(MetricsReport, IsDeterministicJson) {
  SynthSpec spec;
  spec.num_docs = 5;
  auto docs = generate_synthetic_corpus(spec, 20);
  Vocab vocab = Vocab::build(docs);
  EvalOptions opts;
  opts.gold_matrices = true;
  Json a = metrics_report_json(evaluate_corpus(docs, vocab, Scorer{}, opts), "abcd", 7);
  Json b = metrics_report_json(evaluate_corpus(docs, vocab, Scorer{}, opts), "abcd", 7);
  EXPECT_EQ(a.dump(2), b.dump(2));
  EXPECT_EQ(a.at("config_hash"), "abcd");
  EXPECT_EQ(a.at("seed"), 7);
  EXPECT_TRUE(a.contains("aggregate"));
  EXPECT_TRUE(a.contains("per_doc"));
}
