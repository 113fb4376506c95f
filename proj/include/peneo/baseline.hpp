#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "peneo/corpus.hpp"
#include "peneo/encoder.hpp"
#include "peneo/ops.hpp"
#include "peneo/tokenize.hpp"

namespace peneo {

// ---- reading order: recursive XY cut --------------------------------------

namespace detail {

struct Interval {
  float lo, hi;
};

// Groups 1-D intervals separated by strictly positive gaps. Returns group
// index per input, with groups numbered in coordinate order.
inline std::vector<int> gap_groups(std::vector<Interval> intervals, std::vector<int>* order) {
  std::vector<int> idx(intervals.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return intervals[static_cast<std::size_t>(a)].lo < intervals[static_cast<std::size_t>(b)].lo;
  });
  std::vector<int> group(intervals.size(), 0);
  int g = 0;
  float reach = intervals[static_cast<std::size_t>(idx[0])].hi;
  group[static_cast<std::size_t>(idx[0])] = 0;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const auto& iv = intervals[static_cast<std::size_t>(idx[k])];
    if (iv.lo > reach) ++g;
    group[static_cast<std::size_t>(idx[k])] = g;
    reach = std::max(reach, iv.hi);
  }
  if (order != nullptr) *order = idx;
  return group;
}

inline void xycut_recurse(const std::vector<Line>& lines, std::vector<int> subset,
                          std::vector<int>* out) {
  if (subset.size() <= 1) {
    for (int i : subset) out->push_back(lines[static_cast<std::size_t>(i)].id);
    return;
  }

  for (int axis = 0; axis < 2; ++axis) {  // 0: horizontal cut (y), 1: vertical cut (x)
    std::vector<Interval> intervals;
    intervals.reserve(subset.size());
    for (int i : subset) {
      const BBox& b = lines[static_cast<std::size_t>(i)].bbox;
      intervals.push_back(axis == 0 ? Interval{b.y0, b.y1} : Interval{b.x0, b.x1});
    }
    std::vector<int> group = gap_groups(intervals, nullptr);
    int n_groups = 1 + *std::max_element(group.begin(), group.end());
    if (n_groups > 1) {
      for (int g = 0; g < n_groups; ++g) {
        std::vector<int> child;
        for (std::size_t k = 0; k < subset.size(); ++k) {
          if (group[k] == g) child.push_back(subset[k]);
        }
        xycut_recurse(lines, std::move(child), out);
      }
      return;
    }
  }

  // No clean gap on either axis: top-to-bottom, then left-to-right.
  std::sort(subset.begin(), subset.end(), [&](int a, int b) {
    const Line& la = lines[static_cast<std::size_t>(a)];
    const Line& lb = lines[static_cast<std::size_t>(b)];
    if (la.bbox.cy() != lb.bbox.cy()) return la.bbox.cy() < lb.bbox.cy();
    if (la.bbox.cx() != lb.bbox.cx()) return la.bbox.cx() < lb.bbox.cx();
    return la.id < lb.id;
  });
  for (int i : subset) out->push_back(lines[static_cast<std::size_t>(i)].id);
}

}  // namespace detail

// Deterministic reading order as line ids. A plain recursive XY cut with a
// zero gap threshold; single-column pages degrade to y-then-x ordering.
inline std::vector<int> xycut_sort(const std::vector<Line>& lines) {
  if (lines.empty()) throw DataError("xycut: no lines");
  std::vector<int> subset(lines.size());
  for (std::size_t i = 0; i < subset.size(); ++i) subset[i] = static_cast<int>(i);
  std::vector<int> out;
  out.reserve(lines.size());
  detail::xycut_recurse(lines, std::move(subset), &out);
  return out;
}

// Copy of the document with lines in XY-cut order.
inline Document sorted_document(const Document& doc) {
  Document out = doc;
  std::vector<int> order = xycut_sort(doc.lines);
  out.lines.clear();
  for (int lid : order) {
    const Line* l = doc.line_by_id(lid);
    if (l != nullptr) out.lines.push_back(*l);
  }
  return out;
}

// ---- BIO tagging -----------------------------------------------------------

// 7-way token tags: O plus B/I for header, question, answer.
enum BioTag : int {
  kTagO = 0,
  kTagBHeader = 1,
  kTagIHeader = 2,
  kTagBQuestion = 3,
  kTagIQuestion = 4,
  kTagBAnswer = 5,
  kTagIAnswer = 6,
};
constexpr int kNumBioTags = 7;

inline int bio_begin_tag(EntityCategory c) {
  switch (c) {
    case EntityCategory::header: return kTagBHeader;
    case EntityCategory::question: return kTagBQuestion;
    case EntityCategory::answer: return kTagBAnswer;
    case EntityCategory::other: return kTagO;
  }
  return kTagO;
}

inline EntityCategory bio_tag_category(int tag) {
  switch (tag) {
    case kTagBHeader:
    case kTagIHeader: return EntityCategory::header;
    case kTagBQuestion:
    case kTagIQuestion: return EntityCategory::question;
    case kTagBAnswer:
    case kTagIAnswer: return EntityCategory::answer;
    default: return EntityCategory::other;
  }
}

// Mixed-granularity BIO targets over the sorted token sequence: maximal runs
// of an entity's lines that stay adjacent and ordered in the sort become one
// B/I unit; lines torn apart by the sort are tagged as their own units.
inline std::vector<int> build_bio_tags(const TokenizedDoc& sorted_doc,
                                       const std::vector<EntityAnn>& entities) {
  std::vector<int> tags(static_cast<std::size_t>(sorted_doc.size()), kTagO);
  std::map<int, int> line_pos;
  for (std::size_t p = 0; p < sorted_doc.line_order.size(); ++p) {
    line_pos[sorted_doc.line_order[p]] = static_cast<int>(p);
  }

  for (const auto& e : entities) {
    if (e.category == EntityCategory::other) continue;
    const int begin_tag = bio_begin_tag(e.category);
    const int inside_tag = begin_tag + 1;

    std::size_t i = 0;
    while (i < e.line_ids.size()) {
      auto pos_it = line_pos.find(e.line_ids[i]);
      if (pos_it == line_pos.end()) {
        ++i;
        continue;
      }
      // Extend the run while the next entity line sits in the next sorted slot.
      std::size_t j = i + 1;
      int prev_pos = pos_it->second;
      while (j < e.line_ids.size()) {
        auto next_it = line_pos.find(e.line_ids[j]);
        if (next_it == line_pos.end() || next_it->second != prev_pos + 1) break;
        prev_pos = next_it->second;
        ++j;
      }
      bool first_token = true;
      for (std::size_t k = i; k < j; ++k) {
        const LineSpan& span = sorted_doc.line_spans.at(e.line_ids[k]);
        for (int t = span.first; t <= span.last; ++t) {
          tags[static_cast<std::size_t>(t)] = first_token ? begin_tag : inside_tag;
          first_token = false;
        }
      }
      i = j;
    }
  }
  return tags;
}

// ---- SER / RE heads --------------------------------------------------------

struct PredictedEntity {
  EntityCategory category = EntityCategory::other;
  std::vector<int> token_indices;
  std::string text;
};

inline std::string entity_text_from_tokens(const TokenizedDoc& doc,
                                           const std::vector<int>& tokens) {
  std::string out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    // Maximal run of consecutive indices within one line.
    std::size_t j = i + 1;
    const int line = doc.tokens[static_cast<std::size_t>(tokens[i])].line_id;
    while (j < tokens.size() && tokens[j] == tokens[j - 1] + 1 &&
           doc.tokens[static_cast<std::size_t>(tokens[j])].line_id == line) {
      ++j;
    }
    if (!out.empty()) out += ' ';
    out += doc.span_text(tokens[i], tokens[j - 1]);
    i = j;
  }
  return out;
}

// Gold entities mapped into the sorted token index space, lines in entity
// order (the RE training input granularity).
inline std::vector<PredictedEntity> gold_entities_in_tokens(const TokenizedDoc& sorted_doc,
                                                            const std::vector<EntityAnn>& anns) {
  std::vector<PredictedEntity> out;
  for (const auto& e : anns) {
    PredictedEntity pe;
    pe.category = e.category;
    for (int lid : e.line_ids) {
      auto it = sorted_doc.line_spans.find(lid);
      if (it == sorted_doc.line_spans.end()) continue;
      for (int t = it->second.first; t <= it->second.last; ++t) pe.token_indices.push_back(t);
    }
    if (pe.token_indices.empty()) continue;
    pe.text = entity_text_from_tokens(sorted_doc, pe.token_indices);
    out.push_back(std::move(pe));
  }
  return out;
}

template <class T>
struct SerHeadT {
  ParamStoreT<T> store;
  ParamSlotT<T>* w1;
  ParamSlotT<T>* b1;
  ParamSlotT<T>* w2;
  ParamSlotT<T>* b2;

  SerHeadT(int c_e, Rng& rng, const std::string& prefix = "ser/") {
    w1 = &store.add(prefix + "W1", TensorT<T>::randn({c_e, c_e}, rng, 0.2));
    b1 = &store.add(prefix + "b1", TensorT<T>({c_e}));
    w2 = &store.add(prefix + "W2", TensorT<T>::randn({kNumBioTags, c_e}, rng, 0.2));
    b2 = &store.add(prefix + "b2", TensorT<T>({kNumBioTags}));
  }

  Var<T> logits(const Var<T>& features) {
    return linear(relu(linear(features, w1->var(), b1->var())), w2->var(), b2->var());
  }
};

// Greedy tag decode with orphan-I repair, then span assembly.
template <class T>
std::vector<PredictedEntity> ser_infer(const TensorT<T>& tag_logits, const TokenizedDoc& doc) {
  const int n = tag_logits.dim(0);
  std::vector<int> tags(static_cast<std::size_t>(n), kTagO);
  for (int t = 0; t < n; ++t) {
    int best = 0;
    for (int k = 1; k < kNumBioTags; ++k) {
      if (tag_logits.at(t, k) > tag_logits.at(t, best)) best = k;
    }
    tags[static_cast<std::size_t>(t)] = best;
  }

  std::vector<PredictedEntity> out;
  PredictedEntity cur;
  auto flush = [&]() {
    if (!cur.token_indices.empty()) {
      cur.text = entity_text_from_tokens(doc, cur.token_indices);
      out.push_back(cur);
    }
    cur = PredictedEntity{};
  };
  for (int t = 0; t < n; ++t) {
    const int tag = tags[static_cast<std::size_t>(t)];
    if (tag == kTagO) {
      flush();
      continue;
    }
    const EntityCategory cat = bio_tag_category(tag);
    const bool begin = tag == bio_begin_tag(cat);
    if (begin || cur.token_indices.empty() || cur.category != cat) {
      flush();  // orphan I- becomes a fresh begin
      cur.category = cat;
    }
    cur.token_indices.push_back(t);
  }
  flush();
  return out;
}

template <class T>
struct ReHeadT {
  int c_e;
  int hidden;
  ParamStoreT<T> store;
  ParamSlotT<T>* w1;
  ParamSlotT<T>* b1;
  ParamSlotT<T>* w2;
  ParamSlotT<T>* b2;

  ReHeadT(int c_e_, Rng& rng, const std::string& prefix = "re/")
      : c_e(c_e_), hidden(c_e_) {
    const int in = 2 * c_e + 8;  // two first-token features + two category one-hots
    w1 = &store.add(prefix + "W1", TensorT<T>::randn({hidden, in}, rng, 0.2));
    b1 = &store.add(prefix + "b1", TensorT<T>({hidden}));
    w2 = &store.add(prefix + "W2", TensorT<T>::randn({2, hidden}, rng, 0.2));
    b2 = &store.add(prefix + "b2", TensorT<T>({2}));
  }
};

// Ordered candidate pairs: every question entity against every answer entity.
inline std::vector<std::pair<int, int>> re_candidates(const std::vector<PredictedEntity>& entities) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t q = 0; q < entities.size(); ++q) {
    if (entities[q].category != EntityCategory::question) continue;
    for (std::size_t a = 0; a < entities.size(); ++a) {
      if (entities[a].category != EntityCategory::answer) continue;
      out.emplace_back(static_cast<int>(q), static_cast<int>(a));
    }
  }
  return out;
}

template <class T>
Var<T> re_pair_logits(const Var<T>& features, const std::vector<PredictedEntity>& entities,
                      const std::vector<std::pair<int, int>>& candidates, ReHeadT<T>& head) {
  const int c_e = head.c_e;
  std::vector<int> key_rows, value_rows;
  TensorT<T> onehots({static_cast<int>(candidates.size()), 8});
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const auto& key = entities[static_cast<std::size_t>(candidates[ci].first)];
    const auto& value = entities[static_cast<std::size_t>(candidates[ci].second)];
    key_rows.push_back(key.token_indices.front());
    value_rows.push_back(value.token_indices.front());
    onehots.at(static_cast<int>(ci), static_cast<int>(key.category)) = T(1);
    onehots.at(static_cast<int>(ci), 4 + static_cast<int>(value.category)) = T(1);
  }
  (void)c_e;
  Var<T> rep = concat_cols(
      concat_cols(gather_rows(features, key_rows), gather_rows(features, value_rows)),
      constant(std::move(onehots)));
  return linear(relu(linear(rep, head.w1->var(), head.b1->var())), head.w2->var(),
                head.b2->var());
}

// Keeps candidates whose positive logit wins; ties go negative.
template <class T>
std::vector<std::pair<int, int>> re_infer(const TensorT<T>& pair_logits,
                                          const std::vector<std::pair<int, int>>& candidates) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    if (pair_logits.at(static_cast<int>(ci), 1) > pair_logits.at(static_cast<int>(ci), 0)) {
      out.push_back(candidates[ci]);
    }
  }
  return out;
}

// ---- SER error injection (error-accumulation study) ------------------------

enum class SerError { false_negative, false_positive, category_error, fragmentation };

inline const char* ser_error_name(SerError e) {
  switch (e) {
    case SerError::false_negative: return "FN";
    case SerError::false_positive: return "FP";
    case SerError::category_error: return "CE";
    case SerError::fragmentation: return "EF";
  }
  return "?";
}

inline std::optional<SerError> ser_error_from_name(const std::string& s) {
  if (s == "FN") return SerError::false_negative;
  if (s == "FP") return SerError::false_positive;
  if (s == "CE") return SerError::category_error;
  if (s == "EF") return SerError::fragmentation;
  return std::nullopt;
}

// Applies one disturbance type to gold entities with probability p per
// eligible entity. Deterministic in the rng state.
inline std::vector<PredictedEntity> inject_ser_errors(const std::vector<PredictedEntity>& gold,
                                                      SerError error_type, double p, Rng& rng) {
  std::vector<PredictedEntity> out;
  out.reserve(gold.size());
  for (const auto& e : gold) {
    switch (error_type) {
      case SerError::false_negative: {
        PredictedEntity copy = e;
        const bool eligible = e.category == EntityCategory::question ||
                              e.category == EntityCategory::answer;
        if (eligible && rng.chance(p)) copy.category = EntityCategory::other;
        out.push_back(std::move(copy));
        break;
      }
      case SerError::false_positive: {
        PredictedEntity copy = e;
        if (e.category == EntityCategory::other && rng.chance(p)) {
          copy.category = rng.chance(0.5) ? EntityCategory::question : EntityCategory::answer;
        }
        out.push_back(std::move(copy));
        break;
      }
      case SerError::category_error: {
        PredictedEntity copy = e;
        if (e.category == EntityCategory::question && rng.chance(p)) {
          copy.category = EntityCategory::answer;
        } else if (e.category == EntityCategory::answer && rng.chance(p)) {
          copy.category = EntityCategory::question;
        }
        out.push_back(std::move(copy));
        break;
      }
      case SerError::fragmentation: {
        if (e.token_indices.size() >= 2 && rng.chance(p)) {
          const int cut = rng.range_int(1, static_cast<int>(e.token_indices.size()) - 1);
          PredictedEntity first, second;
          first.category = e.category;
          first.token_indices.assign(e.token_indices.begin(), e.token_indices.begin() + cut);
          // The second fragment gets a different category, uniformly.
          EntityCategory cats[3];
          int nc = 0;
          for (EntityCategory c : {EntityCategory::header, EntityCategory::question,
                                   EntityCategory::answer, EntityCategory::other}) {
            if (c != e.category) cats[nc++] = c;
          }
          second.category = cats[rng.below(3)];
          second.token_indices.assign(e.token_indices.begin() + cut, e.token_indices.end());
          out.push_back(std::move(first));
          out.push_back(std::move(second));
        } else {
          out.push_back(e);
        }
        break;
      }
    }
  }
  return out;
}

// Recomputes entity texts (after injection the spans may have changed).
inline void refresh_entity_texts(const TokenizedDoc& doc, std::vector<PredictedEntity>* entities) {
  for (auto& e : *entities) e.text = entity_text_from_tokens(doc, e.token_indices);
}

// ---- SER predictions import/export -----------------------------------------

inline Json ser_entities_to_json(const std::string& doc_id,
                                 const std::vector<PredictedEntity>& entities) {
  Json j;
  j["doc_id"] = doc_id;
  j["entities"] = Json::array();
  for (const auto& e : entities) {
    j["entities"].push_back(
        Json{{"category", category_name(e.category)}, {"token_indices", e.token_indices}});
  }
  return j;
}

inline std::vector<PredictedEntity> ser_entities_from_json(const Json& j,
                                                           const TokenizedDoc& doc) {
  std::vector<PredictedEntity> out;
  for (const auto& je : j.at("entities")) {
    PredictedEntity e;
    auto cat = category_from_name(je.at("category").get<std::string>());
    if (!cat) throw DataError("ser import: unknown category");
    e.category = *cat;
    e.token_indices = je.at("token_indices").get<std::vector<int>>();
    for (int t : e.token_indices) {
      if (t < 0 || t >= doc.size()) throw DataError("ser import: token index out of range");
    }
    if (e.token_indices.empty()) continue;
    e.text = entity_text_from_tokens(doc, e.token_indices);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace peneo
