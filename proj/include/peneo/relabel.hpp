#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "peneo/corpus.hpp"

namespace peneo {

// A split decision whose gap fell within 20% of the threshold; emitted to the
// review sidecar for human inspection.
struct RelabelFlag {
  std::string doc_id;
  int entity_id = 0;
  int word_index = 0;  // index of the latter word of the adjacent pair
  float gap = 0;
  float threshold = 0;
  bool split = false;
};

namespace detail {

inline Line make_line_from_words(const std::vector<Word>& words, std::size_t begin,
                                 std::size_t end) {
  Line line;
  BBox box = words[begin].bbox;
  std::string text;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) {
      text += ' ';
      box = box.united(words[i].bbox);
    }
    text += words[i].text;
  }
  line.text = std::move(text);
  line.bbox = box;
  line.words.assign(words.begin() + static_cast<std::ptrdiff_t>(begin),
                    words.begin() + static_cast<std::ptrdiff_t>(end));
  return line;
}

}  // namespace detail

// Splits an entity's word sequence into lines: a new line starts when the
// vertical center distance between adjacent words exceeds the mean word
// height of the entity. Gaps within 20% of the threshold are flagged.
inline std::vector<Line> relabel_entities_to_lines(const std::vector<Word>& words,
                                                   std::vector<RelabelFlag>* flags = nullptr) {
  if (words.empty()) throw DataError("relabel: entity has no words");

  float mean_height = 0;
  for (const auto& w : words) mean_height += w.bbox.height();
  mean_height /= static_cast<float>(words.size());

  std::vector<Line> lines;
  std::size_t begin = 0;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const float gap = std::abs(words[i].bbox.cy() - words[i - 1].bbox.cy());
    const bool split = gap > mean_height;
    if (flags != nullptr && mean_height > 0 && std::abs(gap - mean_height) <= 0.2f * mean_height) {
      RelabelFlag f;
      f.word_index = static_cast<int>(i);
      f.gap = gap;
      f.threshold = mean_height;
      f.split = split;
      flags->push_back(f);
    }
    if (split) {
      lines.push_back(detail::make_line_from_words(words, begin, i));
      begin = i;
    }
  }
  lines.push_back(detail::make_line_from_words(words, begin, words.size()));
  return lines;
}

struct RelabelResult {
  std::vector<Document> documents;
  std::vector<RelabelFlag> flags;
  std::vector<std::string> warnings;
};

// Converts entity-level annotations (one "line" per entity block, with word
// boxes) into line-level ones. Lines without word boxes pass through intact.
inline RelabelResult relabel_dataset(const std::vector<Document>& docs) {
  RelabelResult result;
  for (const auto& src : docs) {
    Document out;
    out.id = src.id;
    out.width = src.width;
    out.height = src.height;
    int next_line_id = 0;

    std::set<int> entity_lines;
    for (const auto& e : src.entities) {
      for (int lid : e.line_ids) entity_lines.insert(lid);
    }

    for (const auto& e : src.entities) {
      EntityAnn ne;
      ne.id = e.id;
      ne.category = e.category;
      std::vector<Word> words;
      bool passthrough = false;
      for (int lid : e.line_ids) {
        const Line* line = src.line_by_id(lid);
        if (line == nullptr) continue;
        if (line->words.empty()) {
          passthrough = true;
          break;
        }
        words.insert(words.end(), line->words.begin(), line->words.end());
      }
      if (passthrough || words.empty()) {
        // No word geometry: keep the original lines unchanged.
        for (int lid : e.line_ids) {
          const Line* line = src.line_by_id(lid);
          if (line == nullptr) continue;
          Line copy = *line;
          copy.id = next_line_id++;
          ne.line_ids.push_back(copy.id);
          out.lines.push_back(std::move(copy));
        }
        if (!ne.line_ids.empty()) out.entities.push_back(std::move(ne));
        if (passthrough) {
          result.warnings.push_back("doc " + src.id + ": entity " + std::to_string(e.id) +
                                    " has no word boxes, kept as-is");
        }
        continue;
      }

      std::vector<RelabelFlag> flags;
      auto new_lines = relabel_entities_to_lines(words, &flags);
      for (auto& f : flags) {
        f.doc_id = src.id;
        f.entity_id = e.id;
        result.flags.push_back(f);
      }
      for (auto& line : new_lines) {
        line.id = next_line_id++;
        ne.line_ids.push_back(line.id);
        out.lines.push_back(std::move(line));
      }
      out.entities.push_back(std::move(ne));
    }

    // Lines not referenced by any entity are copied unchanged.
    for (const auto& line : src.lines) {
      if (entity_lines.count(line.id)) continue;
      Line copy = line;
      copy.id = next_line_id++;
      out.lines.push_back(std::move(copy));
    }

    out.links = src.links;
    result.documents.push_back(std::move(out));
  }
  return result;
}

inline void save_review_sidecar(const std::string& path, const std::vector<RelabelFlag>& flags) {
  Json j;
  j["flags"] = Json::array();
  for (const auto& f : flags) {
    j["flags"].push_back(Json{{"doc_id", f.doc_id},
                              {"entity_id", f.entity_id},
                              {"word_index", f.word_index},
                              {"gap", f.gap},
                              {"threshold", f.threshold},
                              {"split", f.split}});
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("relabel: cannot write " + path);
  os << j.dump(2) << "\n";
}

}  // namespace peneo
