#include <gtest/gtest.h>

#include "peneo/synth.hpp"
#include "peneo/tokenize.hpp"

using namespace peneo;

TEST(Synth, ZeroDocsGiveEmptyCorpus) {
  SynthSpec spec;
  spec.num_docs = 0;
  EXPECT_TRUE(generate_synthetic_corpus(spec, 1).empty());
}

TEST(Synth, DeterministicInSeed) {
  SynthSpec spec;
  spec.num_docs = 20;
  auto a = generate_synthetic_corpus(spec, 9);
  auto b = generate_synthetic_corpus(spec, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(detail::document_to_json(a[i]).dump(), detail::document_to_json(b[i]).dump());
  }
  auto c = generate_synthetic_corpus(spec, 10);
  EXPECT_NE(detail::document_to_json(a[0]).dump(), detail::document_to_json(c[0]).dump());
}

TEST(Synth, MultiLineFractionNearTarget) {
  SynthSpec spec;
  spec.num_docs = 200;
  spec.multi_line_frac = 0.3;
  auto docs = generate_synthetic_corpus(spec, 42);
  long answers = 0, multi = 0;
  for (const auto& d : docs) {
    for (const auto& e : d.entities) {
      if (e.category != EntityCategory::answer) continue;
      ++answers;
      if (e.line_ids.size() >= 2) ++multi;
    }
  }
  ASSERT_GT(answers, 0);
  const double frac = static_cast<double>(multi) / static_cast<double>(answers);
  EXPECT_NEAR(frac, 0.30, 0.05);
}

TEST(Synth, LinksAreQuestionToAnswer) {
  SynthSpec spec;
  spec.num_docs = 40;
  auto docs = generate_synthetic_corpus(spec, 11);
  for (const auto& d : docs) {
    EXPECT_FALSE(d.links.empty());
    for (const auto& link : d.links) {
      const EntityAnn* key = d.entity_by_id(link.key_entity_id);
      const EntityAnn* value = d.entity_by_id(link.value_entity_id);
      ASSERT_NE(key, nullptr);
      ASSERT_NE(value, nullptr);
      EXPECT_EQ(key->category, EntityCategory::question);
      EXPECT_EQ(value->category, EntityCategory::answer);
    }
  }
}

TEST(Synth, MultiLineEntitiesVerticallyOrdered) {
  SynthSpec spec;
  spec.num_docs = 60;
  spec.multi_line_frac = 0.6;
  auto docs = generate_synthetic_corpus(spec, 13);
  for (const auto& d : docs) {
    for (const auto& e : d.entities) {
      for (std::size_t k = 1; k < e.line_ids.size(); ++k) {
        const Line* prev = d.line_by_id(e.line_ids[k - 1]);
        const Line* next = d.line_by_id(e.line_ids[k]);
        ASSERT_NE(prev, nullptr);
        ASSERT_NE(next, nullptr);
        EXPECT_LT(prev->bbox.cy(), next->bbox.cy());
      }
    }
  }
}

TEST(Synth, RespectsTokenBudget) {
  SynthSpec spec;
  spec.num_docs = 100;
  spec.max_tokens_per_doc = 40;
  auto docs = generate_synthetic_corpus(spec, 99);
  Vocab vocab = Vocab::build(docs);
  for (const auto& d : docs) {
    TokenizedDoc tok = tokenize(d, vocab);
    EXPECT_LE(tok.size(), 40);
    EXPECT_FALSE(tok.truncated);
  }
}

TEST(Synth, VocabularyStaysSmall) {
  SynthSpec spec;
  spec.num_docs = 200;
  auto docs = generate_synthetic_corpus(spec, 7);
  Vocab vocab = Vocab::build(docs);
  // key + value + distractor + header lexicons plus the two sentinels
  EXPECT_LE(vocab.size(), spec.key_vocab + spec.value_vocab + spec.distractor_vocab +
                              spec.header_vocab + 2);
  EXPECT_LE(vocab.size(), 200);
}

TEST(Synth, EveryLineBelongsToAtMostOneEntity) {
  SynthSpec spec;
  spec.num_docs = 30;
  auto docs = generate_synthetic_corpus(spec, 23);
  for (const auto& d : docs) {
    std::set<int> used;
    for (const auto& e : d.entities) {
      for (int lid : e.line_ids) {
        EXPECT_TRUE(used.insert(lid).second) << "line in two entities";
        EXPECT_NE(d.line_by_id(lid), nullptr);
      }
    }
  }
}

TEST(Synth, ShuffleFlagControlsLineOrder) {
  SynthSpec spec;
  spec.num_docs = 10;
  spec.shuffle_lines = false;
  auto plain = generate_synthetic_corpus(spec, 55);
  for (const auto& d : plain) {
    for (std::size_t i = 0; i < d.lines.size(); ++i) {
      EXPECT_EQ(d.lines[i].id, static_cast<int>(i));
    }
  }
  spec.shuffle_lines = true;
  auto shuffled = generate_synthetic_corpus(spec, 55);
  bool any_moved = false;
  for (const auto& d : shuffled) {
    for (std::size_t i = 0; i < d.lines.size(); ++i) {
      if (d.lines[i].id != static_cast<int>(i)) any_moved = true;
    }
  }
  EXPECT_TRUE(any_moved);
}

TEST(Synth, BoxesStayOnPage) {
  SynthSpec spec;
  spec.num_docs = 50;
  spec.two_column_frac = 1.0;
  auto docs = generate_synthetic_corpus(spec, 77);
  for (const auto& d : docs) {
    for (const auto& line : d.lines) {
      EXPECT_GE(line.bbox.x0, 0.0f);
      EXPECT_GE(line.bbox.y0, 0.0f);
      EXPECT_LE(line.bbox.x1, d.width);
      EXPECT_LE(line.bbox.y1, d.height);
    }
  }
}
