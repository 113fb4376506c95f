#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "peneo/corpus.hpp"
#include "peneo/decoder.hpp"
#include "peneo/tokenize.hpp"

namespace peneo {

// Per-row best positive link of one relation matrix: row -> (column, score).
// Among positive cells of a row, the highest positive-class probability wins;
// on an exact tie the smallest column is kept.
struct BestLink {
  int col = 0;
  float score = 0;
};
using BestLinkMap = std::map<int, BestLink>;

struct BestLinkMaps {
  std::array<BestLinkMap, kNumHeads> maps;

  const BestLinkMap& operator[](int head) const {
    return maps[static_cast<std::size_t>(head)];
  }
  BestLinkMap& operator[](int head) { return maps[static_cast<std::size_t>(head)]; }
};

inline BestLinkMaps build_best_maps(const RelationMatrices& matrices,
                                    const RelationScores& scores) {
  if (matrices.n != scores.n) throw ConfigError("best_maps: size mismatch");
  BestLinkMaps out;
  for (int h = 0; h < kNumHeads; ++h) {
    auto& map = out[h];
    for (int i = 0; i < matrices.n; ++i) {
      for (int j = 0; j < matrices.n; ++j) {
        if (matrices.at(h, i, j) == 0) continue;
        const float s = scores.positive(h, i, j);
        auto it = map.find(i);
        if (it == map.end()) {
          map.emplace(i, BestLink{j, s});
        } else if (s > it->second.score) {
          it->second = BestLink{j, s};
        }
      }
    }
  }
  return out;
}

// One extracted key-value pair. Token lists concatenate whole validated line
// spans; strings join the spans' line texts with single spaces.
struct ParsedPair {
  std::vector<int> key_tokens;
  std::vector<int> value_tokens;
  std::string key_string;
  std::string value_string;
};

namespace detail {

struct EntityChain {
  std::vector<int> tokens;
  std::string text;
  int tail = -1;
  bool valid = false;
};

// Walks one entity: the first line comes from the line-extraction map, then
// head/tail grouping chains are followed jointly. A chain stops when either
// map runs out or the proposed next line is not an extracted line; revisiting
// a line head (a cycle) or exceeding the extracted-line budget invalidates
// the whole entity so the surrounding pair is discarded.
inline EntityChain collect_entity(const BestLinkMaps& maps, int start_head,
                                  const TokenizedDoc& doc) {
  EntityChain chain;
  const auto& line_map = maps[kLineExtract];
  const auto& group_head = maps[kGroupHead];
  const auto& group_tail = maps[kGroupTail];

  auto first = line_map.find(start_head);
  if (first == line_map.end()) return chain;

  int cur_head = start_head;
  int cur_tail = first->second.col;
  const int n = doc.size();
  if (cur_tail < cur_head || cur_head < 0 || cur_tail >= n) return chain;

  auto append_span = [&](int a, int b) {
    for (int t = a; t <= b; ++t) chain.tokens.push_back(t);
    if (!chain.text.empty()) chain.text += ' ';
    chain.text += doc.span_text(a, b);
  };
  append_span(cur_head, cur_tail);

  std::set<int> visited{cur_head};
  const std::size_t max_lines = line_map.size();
  std::size_t steps = 0;
  while (true) {
    auto next_head_it = group_head.find(cur_head);
    if (next_head_it == group_head.end()) break;
    auto next_tail_it = group_tail.find(cur_tail);
    if (next_tail_it == group_tail.end()) break;
    const int next_head = next_head_it->second.col;
    const int next_tail = next_tail_it->second.col;
    auto line_it = line_map.find(next_head);
    if (line_it == line_map.end() || line_it->second.col != next_tail) break;
    if (next_tail < next_head || next_tail >= n) return chain;  // contradictory span
    if (!visited.insert(next_head).second) return chain;        // cycle
    if (++steps > max_lines) return chain;                      // line budget
    append_span(next_head, next_tail);
    cur_head = next_head;
    cur_tail = next_tail;
  }
  chain.tail = cur_tail;
  chain.valid = true;
  return chain;
}

}  // namespace detail

// Linking parsing: assembles key-value pairs from the five best-link maps.
// Contradictory local predictions invalidate only the pair that touched them.
inline std::vector<ParsedPair> parse_links(const BestLinkMaps& maps, const TokenizedDoc& doc) {
  std::vector<ParsedPair> out;
  const auto& link_tail = maps[kLinkTail];
  for (const auto& [key_head, value_entry] : maps[kLinkHead]) {
    detail::EntityChain key = detail::collect_entity(maps, key_head, doc);
    if (!key.valid) continue;
    detail::EntityChain value = detail::collect_entity(maps, value_entry.col, doc);
    if (!value.valid) continue;
    auto tail_it = link_tail.find(key.tail);
    if (tail_it == link_tail.end() || tail_it->second.col != value.tail) continue;
    ParsedPair pair;
    pair.key_tokens = std::move(key.tokens);
    pair.value_tokens = std::move(value.tokens);
    pair.key_string = std::move(key.text);
    pair.value_string = std::move(value.text);
    out.push_back(std::move(pair));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> pair_strings(
    const std::vector<ParsedPair>& pairs) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(p.key_string, p.value_string);
  return out;
}

inline Json parsed_pairs_to_json(const std::string& doc_id, const std::vector<ParsedPair>& pairs) {
  Json j;
  j["doc_id"] = doc_id;
  j["pairs"] = Json::array();
  for (const auto& p : pairs) {
    j["pairs"].push_back(Json{{"key", p.key_string},
                              {"value", p.value_string},
                              {"key_token_indices", p.key_tokens},
                              {"value_token_indices", p.value_tokens}});
  }
  return j;
}

}  // namespace peneo
