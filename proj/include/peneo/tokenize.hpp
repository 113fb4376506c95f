#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "peneo/corpus.hpp"

namespace peneo {

// Whole-word vocabulary built from the training split. No subword model:
// tokens stay word-aligned so surface strings reconstruct exactly.
struct Vocab {
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kUnk = "<unk>";

  std::vector<std::string> words;  // index = id
  std::unordered_map<std::string, int> ids;

  Vocab() {
    add(kPad);
    add(kUnk);
  }

  int add(const std::string& w) {
    auto it = ids.find(w);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(words.size());
    words.push_back(w);
    ids.emplace(w, id);
    return id;
  }

  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int size() const { return static_cast<int>(words.size()); }

  int id(const std::string& w) const {
    auto it = ids.find(w);
    return it == ids.end() ? unk_id() : it->second;
  }

  static Vocab build(const std::vector<Document>& docs) {
    Vocab v;
    for (const auto& doc : docs) {
      for (const auto& line : doc.lines) {
        for (const auto& w : split_whitespace(line.text)) v.add(w);
      }
    }
    return v;
  }

  static std::vector<std::string> split_whitespace(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
  }
};

struct TokenInfo {
  int vocab_id = 0;
  std::string surface;
  int line_id = 0;
  // Token geometry. Word boxes are used when the line provides them;
  // otherwise the line box is split across the words in proportion to their
  // character counts. Without a 1-D position channel this horizontal extent
  // is the only thing that orders tokens within a line.
  BBox bbox;
};

// Inclusive token span of one line.
struct LineSpan {
  int first = 0;
  int last = 0;
};

// Flat token sequence plus the per-line span table: the shared index space
// for every relation matrix. Line order equals input order; no sorting.
struct TokenizedDoc {
  std::string doc_id;
  float page_width = 1, page_height = 1;
  std::vector<TokenInfo> tokens;
  std::map<int, LineSpan> line_spans;           // line_id -> span
  std::vector<int> line_order;                  // line ids in token order
  std::map<int, std::string> line_texts;        // line_id -> original text
  bool truncated = false;
  std::string warning;

  int size() const { return static_cast<int>(tokens.size()); }

  bool is_line_span(int first, int last) const {
    if (first < 0 || first >= size()) return false;
    auto it = line_spans.find(tokens[static_cast<std::size_t>(first)].line_id);
    return it != line_spans.end() && it->second.first == first && it->second.last == last;
  }

  // Text of the inclusive token range. Uses the original line text when the
  // range is exactly one line; otherwise rebuilds from token surfaces.
  std::string span_text(int first, int last) const {
    if (is_line_span(first, last)) {
      return line_texts.at(tokens[static_cast<std::size_t>(first)].line_id);
    }
    std::string out;
    for (int t = first; t <= last && t < size(); ++t) {
      if (t > first) out += ' ';
      out += tokens[static_cast<std::size_t>(t)].surface;
    }
    return out;
  }
};

constexpr int kDefaultMaxTokens = 512;

namespace detail {

// Per-token boxes for one line: real word boxes when they align with the
// tokens, else a character-proportional horizontal split of the line box.
inline std::vector<BBox> token_boxes(const Line& line, const std::vector<std::string>& words) {
  std::vector<BBox> out;
  if (line.words.size() == words.size()) {
    bool aligned = true;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (line.words[i].text != words[i]) {
        aligned = false;
        break;
      }
    }
    if (aligned) {
      for (const auto& w : line.words) out.push_back(w.bbox);
      return out;
    }
  }
  std::size_t units = words.size() - 1;  // single spaces between words
  for (const auto& w : words) units += w.size();
  const float unit_width = line.bbox.width() / static_cast<float>(std::max<std::size_t>(1, units));
  float cursor = line.bbox.x0;
  for (const auto& w : words) {
    const float width = unit_width * static_cast<float>(w.size());
    out.push_back(BBox{cursor, line.bbox.y0, cursor + width, line.bbox.y1});
    cursor += width + unit_width;
  }
  return out;
}

}  // namespace detail

// Word-level tokenization in input line order. Documents that exceed
// max_tokens are truncated at a line boundary, never mid-line.
inline TokenizedDoc tokenize(const Document& doc, const Vocab& vocab,
                             int max_tokens = kDefaultMaxTokens) {
  TokenizedDoc out;
  out.doc_id = doc.id;
  out.page_width = doc.width > 0 ? doc.width : 1;
  out.page_height = doc.height > 0 ? doc.height : 1;
  for (const auto& line : doc.lines) {
    const auto words = Vocab::split_whitespace(line.text);
    if (static_cast<int>(out.tokens.size() + words.size()) > max_tokens) {
      out.truncated = true;
      out.warning = "doc " + doc.id + ": truncated at line boundary after " +
                    std::to_string(out.tokens.size()) + " tokens";
      break;
    }
    if (words.empty()) continue;
    const auto boxes = detail::token_boxes(line, words);
    LineSpan span;
    span.first = static_cast<int>(out.tokens.size());
    for (std::size_t w = 0; w < words.size(); ++w) {
      out.tokens.push_back(TokenInfo{vocab.id(words[w]), words[w], line.id, boxes[w]});
    }
    span.last = static_cast<int>(out.tokens.size()) - 1;
    out.line_spans[line.id] = span;
    out.line_order.push_back(line.id);
    out.line_texts[line.id] = line.text;
  }
  return out;
}

}  // namespace peneo
