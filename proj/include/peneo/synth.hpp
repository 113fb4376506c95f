#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "peneo/corpus.hpp"
#include "peneo/rng.hpp"

namespace peneo {

// Parameters for the synthetic key-value form generator. The layouts are
// simple but deliberately include the hard cases: multi-line values,
// interleaved lines that break sort adjacency, distractor content placed in
// linkable positions, two-column pages, and shuffled line order.
struct SynthSpec {
  int num_docs = 200;
  int min_pairs = 3;
  int max_pairs = 5;
  double multi_line_frac = 0.3;      // fraction of answer entities with >= 2 lines
  double interference_frac = 0.6;    // multi-line values that get a line wedged between
  double below_key_frac = 0.25;      // value placed under the key instead of beside it
  double near_key_distractor_frac = 0.35;
  double two_column_frac = 0.3;
  double header_frac = 0.5;
  int min_distractors = 1;
  int max_distractors = 3;
  bool shuffle_lines = true;
  int key_vocab = 20;
  int value_vocab = 120;
  int distractor_vocab = 30;
  int header_vocab = 8;
  int max_tokens_per_doc = 40;
  float page_size = 1000;
};

namespace detail {

struct SynthLexicon {
  std::vector<std::string> keys, values, distractors, headers;

  static std::string numbered(const char* prefix, int i, const char* suffix = "") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%03d%s", prefix, i, suffix);
    return buf;
  }

  explicit SynthLexicon(const SynthSpec& spec) {
    for (int i = 0; i < spec.key_vocab; ++i) keys.push_back(numbered("K", i, ":"));
    for (int i = 0; i < spec.value_vocab; ++i) values.push_back(numbered("v", i));
    for (int i = 0; i < spec.distractor_vocab; ++i) distractors.push_back(numbered("z", i));
    for (int i = 0; i < spec.header_vocab; ++i) headers.push_back(numbered("hdr", i));
  }
};

struct SynthBuilder {
  const SynthSpec& spec;
  const SynthLexicon& lex;
  Rng& rng;
  Document doc;
  int token_budget;

  static constexpr float kLineHeight = 18;
  static constexpr float kTokenWidth = 36;
  static constexpr float kRowStep = 34;
  static constexpr float kSubRowStep = 26;

  SynthBuilder(const SynthSpec& s, const SynthLexicon& l, Rng& r)
      : spec(s), lex(l), rng(r), token_budget(s.max_tokens_per_doc) {}

  int add_line(const std::string& text, float x, float y, int n_tokens) {
    Line line;
    line.id = static_cast<int>(doc.lines.size());
    line.text = text;
    line.bbox = BBox{x, y, x + kTokenWidth * static_cast<float>(n_tokens) +
                            4.0f * static_cast<float>(n_tokens - 1),
                     y + kLineHeight};
    doc.lines.push_back(std::move(line));
    token_budget -= n_tokens;
    return doc.lines.back().id;
  }

  std::string sample_tokens(const std::vector<std::string>& pool, int n) {
    std::string text;
    for (int i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += pool[static_cast<std::size_t>(rng.below(pool.size()))];
    }
    return text;
  }

  int add_entity(EntityCategory cat, std::vector<int> line_ids) {
    EntityAnn e;
    e.id = static_cast<int>(doc.entities.size());
    e.category = cat;
    e.line_ids = std::move(line_ids);
    doc.entities.push_back(std::move(e));
    return doc.entities.back().id;
  }
};

}  // namespace detail

// Deterministic in (spec, seed): the same arguments always produce the same
// corpus, byte for byte.
inline std::vector<Document> generate_synthetic_corpus(const SynthSpec& spec,
                                                       std::uint64_t seed) {
  detail::SynthLexicon lex(spec);
  Rng master(seed);
  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(spec.num_docs));

  for (int di = 0; di < spec.num_docs; ++di) {
    Rng rng = master.fork();
    detail::SynthBuilder b(spec, lex, rng);
    char idbuf[64];
    std::snprintf(idbuf, sizeof(idbuf), "synth-%llu-%04d",
                  static_cast<unsigned long long>(seed), di);
    b.doc.id = idbuf;
    b.doc.width = spec.page_size;
    b.doc.height = spec.page_size;

    const bool two_columns = rng.chance(spec.two_column_frac);
    float col_y[2] = {70, 70};
    const float col_x[2] = {0, 500};
    const int n_cols = two_columns ? 2 : 1;

    if (rng.chance(spec.header_frac)) {
      const int n = rng.range_int(1, 2);
      if (n <= b.token_budget) {
        int lid = b.add_line(b.sample_tokens(lex.headers, n), rng.uniform(int(320), int(460)),
                             22, n);
        b.add_entity(EntityCategory::header, {lid});
      }
    }

    // Keys are drawn without replacement within one document.
    std::vector<int> key_pool(static_cast<std::size_t>(spec.key_vocab));
    for (int i = 0; i < spec.key_vocab; ++i) key_pool[static_cast<std::size_t>(i)] = i;
    rng.shuffle(key_pool);

    const int want_pairs = rng.range_int(spec.min_pairs, spec.max_pairs);
    for (int pi = 0; pi < want_pairs && pi < static_cast<int>(key_pool.size()); ++pi) {
      const int col = two_columns ? rng.range_int(0, 1) : 0;
      const float cx = col_x[col];
      float& cy = col_y[col];
      if (cy > spec.page_size - 120) break;

      const bool multi = rng.chance(spec.multi_line_frac);
      const int value_lines = multi ? rng.range_int(2, 3) : 1;
      std::vector<int> value_tok_counts;
      int value_tokens = 0;
      for (int li = 0; li < value_lines; ++li) {
        const int n = multi ? rng.range_int(1, 2) : rng.range_int(1, 3);
        value_tok_counts.push_back(n);
        value_tokens += n;
      }
      if (1 + value_tokens > b.token_budget) break;

      const bool below = rng.chance(spec.below_key_frac);
      const float key_x = cx + 40 + static_cast<float>(rng.uniform(0, 30));
      const float value_x = below ? key_x + static_cast<float>(rng.uniform(0, 20))
                                  : cx + 280 + static_cast<float>(rng.uniform(0, 20));

      const int key_id = b.add_line(lex.keys[static_cast<std::size_t>(key_pool[static_cast<std::size_t>(pi)])],
                                    key_x, cy, 1);
      float vy = below ? cy + detail::SynthBuilder::kSubRowStep : cy;
      std::vector<int> value_ids;
      const bool interfere = multi && rng.chance(spec.interference_frac);
      const int interfere_after =
          interfere ? rng.range_int(0, value_lines - 2) : -1;  // gap index
      for (int li = 0; li < value_lines; ++li) {
        value_ids.push_back(b.add_line(
            b.sample_tokens(lex.values, value_tok_counts[static_cast<std::size_t>(li)]),
            value_x + static_cast<float>(rng.uniform(-8, 8)), vy,
            value_tok_counts[static_cast<std::size_t>(li)]));
        if (li == interfere_after && 1 <= b.token_budget) {
          // A stray line vertically between two value lines, overlapping the
          // value column in x: breaks sort adjacency of the entity's lines.
          int lid = b.add_line(b.sample_tokens(lex.distractors, 1),
                               value_x + static_cast<float>(rng.uniform(-20, 20)), vy + 13, 1);
          b.add_entity(EntityCategory::other, {lid});
        }
        vy += detail::SynthBuilder::kSubRowStep;
      }

      if (rng.chance(spec.near_key_distractor_frac) && 1 <= b.token_budget && !below) {
        int lid = b.add_line(b.sample_tokens(lex.distractors, 1),
                             cx + 190 + static_cast<float>(rng.uniform(0, 30)), cy, 1);
        b.add_entity(EntityCategory::other, {lid});
      }

      const int key_entity = b.add_entity(EntityCategory::question, {key_id});
      const int value_entity = b.add_entity(EntityCategory::answer, value_ids);
      b.doc.links.push_back(PairLinkAnn{key_entity, value_entity});

      cy = vy - detail::SynthBuilder::kSubRowStep + detail::SynthBuilder::kRowStep +
           static_cast<float>(rng.uniform(0, 6));
    }

    const int want_distractors = rng.range_int(spec.min_distractors, spec.max_distractors);
    for (int zi = 0; zi < want_distractors; ++zi) {
      const int col = two_columns ? rng.range_int(0, 1) : 0;
      float& cy = col_y[col];
      if (cy > spec.page_size - 60) break;
      const int n = rng.range_int(1, 2);
      if (n > b.token_budget) break;
      const float x = two_columns
                          ? col_x[col] + 120 + static_cast<float>(rng.uniform(0, 200))
                          : 120 + static_cast<float>(rng.uniform(0, 500));
      int lid = b.add_line(b.sample_tokens(lex.distractors, n), x, cy, n);
      b.add_entity(EntityCategory::other, {lid});
      cy += detail::SynthBuilder::kRowStep + static_cast<float>(rng.uniform(0, 6));
    }

    if (spec.shuffle_lines) rng.shuffle(b.doc.lines);
    docs.push_back(std::move(b.doc));
  }
  return docs;
}

}  // namespace peneo
