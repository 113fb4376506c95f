#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "peneo/tensor.hpp"

namespace peneo {

using Json = nlohmann::ordered_json;

struct BBox {
  float x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  float width() const { return x1 - x0; }
  float height() const { return y1 - y0; }
  float cx() const { return 0.5f * (x0 + x1); }
  float cy() const { return 0.5f * (y0 + y1); }
  bool valid() const { return x0 <= x1 && y0 <= y1; }

  BBox united(const BBox& o) const {
    return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
  }
};

struct Word {
  std::string text;
  BBox bbox;
};

struct Line {
  int id = 0;
  std::string text;
  BBox bbox;
  std::vector<Word> words;  // optional; empty means not provided
};

enum class EntityCategory { header, question, answer, other };

inline const char* category_name(EntityCategory c) {
  switch (c) {
    case EntityCategory::header: return "header";
    case EntityCategory::question: return "question";
    case EntityCategory::answer: return "answer";
    case EntityCategory::other: return "other";
  }
  return "other";
}

inline std::optional<EntityCategory> category_from_name(const std::string& s) {
  if (s == "header") return EntityCategory::header;
  if (s == "question") return EntityCategory::question;
  if (s == "answer") return EntityCategory::answer;
  if (s == "other") return EntityCategory::other;
  return std::nullopt;
}

struct EntityAnn {
  int id = 0;
  EntityCategory category = EntityCategory::other;
  std::vector<int> line_ids;  // reading order within the entity
};

struct PairLinkAnn {
  int key_entity_id = 0;
  int value_entity_id = 0;
};

struct Document {
  std::string id;
  float width = 0, height = 0;
  std::vector<Line> lines;
  std::vector<EntityAnn> entities;
  std::vector<PairLinkAnn> links;

  const Line* line_by_id(int line_id) const {
    for (const auto& l : lines) {
      if (l.id == line_id) return &l;
    }
    return nullptr;
  }

  const EntityAnn* entity_by_id(int entity_id) const {
    for (const auto& e : entities) {
      if (e.id == entity_id) return &e;
    }
    return nullptr;
  }
};

struct DatasetLoadResult {
  std::vector<Document> documents;
  std::vector<std::string> warnings;
  int skipped_documents = 0;
  int skipped_links = 0;
};

// Gold key-value pair strings of a document: each entity's lines joined by a
// single space, in annotation order. Shared by evaluation and target code.
inline std::string entity_text(const Document& doc, const EntityAnn& entity) {
  std::string out;
  for (std::size_t i = 0; i < entity.line_ids.size(); ++i) {
    const Line* line = doc.line_by_id(entity.line_ids[i]);
    if (line == nullptr) continue;
    if (i > 0) out += ' ';
    out += line->text;
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> gold_pairs(const Document& doc) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& link : doc.links) {
    const EntityAnn* key = doc.entity_by_id(link.key_entity_id);
    const EntityAnn* value = doc.entity_by_id(link.value_entity_id);
    if (key == nullptr || value == nullptr) continue;
    out.emplace_back(entity_text(doc, *key), entity_text(doc, *value));
  }
  return out;
}

namespace detail {

inline Json bbox_to_json(const BBox& b) { return Json::array({b.x0, b.y0, b.x1, b.y1}); }

inline BBox bbox_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("bbox must be a 4-element array");
  BBox b{j[0].get<float>(), j[1].get<float>(), j[2].get<float>(), j[3].get<float>()};
  if (!b.valid()) throw DataError("bbox has x0>x1 or y0>y1");
  return b;
}

inline Json document_to_json(const Document& doc) {
  Json j;
  j["id"] = doc.id;
  j["width"] = doc.width;
  j["height"] = doc.height;
  j["lines"] = Json::array();
  for (const auto& line : doc.lines) {
    Json jl;
    jl["id"] = line.id;
    jl["text"] = line.text;
    jl["bbox"] = bbox_to_json(line.bbox);
    if (!line.words.empty()) {
      Json jw = Json::array();
      for (const auto& w : line.words) {
        jw.push_back(Json{{"text", w.text}, {"bbox", bbox_to_json(w.bbox)}});
      }
      jl["words"] = std::move(jw);
    }
    j["lines"].push_back(std::move(jl));
  }
  j["entities"] = Json::array();
  for (const auto& e : doc.entities) {
    j["entities"].push_back(Json{
        {"id", e.id}, {"category", category_name(e.category)}, {"line_ids", e.line_ids}});
  }
  j["links"] = Json::array();
  for (const auto& l : doc.links) {
    j["links"].push_back(Json::array({l.key_entity_id, l.value_entity_id}));
  }
  return j;
}

// Parses one document object; throws DataError on schema violations that
// invalidate the whole document.
inline Document document_from_json(const Json& j, DatasetLoadResult* result) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.width = j.at("width").get<float>();
  doc.height = j.at("height").get<float>();
  if (doc.width <= 0 || doc.height <= 0) throw DataError("non-positive page size");

  std::set<int> line_ids;
  for (const auto& jl : j.at("lines")) {
    Line line;
    line.id = jl.at("id").get<int>();
    line.text = jl.at("text").get<std::string>();
    line.bbox = bbox_from_json(jl.at("bbox"));
    if (!line_ids.insert(line.id).second) throw DataError("duplicate line id");
    if (jl.contains("words")) {
      std::string joined;
      for (const auto& jw : jl.at("words")) {
        Word w{jw.at("text").get<std::string>(), bbox_from_json(jw.at("bbox"))};
        if (w.text.empty()) throw DataError("empty word text");
        if (!joined.empty()) joined += ' ';
        joined += w.text;
        line.words.push_back(std::move(w));
      }
      if (!line.words.empty() && joined != line.text) {
        throw DataError("word texts do not reconstruct line text");
      }
    }
    doc.lines.push_back(std::move(line));
  }

  std::set<int> entity_ids;
  std::set<int> used_lines;
  for (const auto& je : j.at("entities")) {
    EntityAnn e;
    e.id = je.at("id").get<int>();
    auto cat = category_from_name(je.at("category").get<std::string>());
    if (!cat) throw DataError("unknown entity category");
    e.category = *cat;
    e.line_ids = je.at("line_ids").get<std::vector<int>>();
    if (e.line_ids.empty()) throw DataError("entity with no lines");
    if (!entity_ids.insert(e.id).second) throw DataError("duplicate entity id");
    for (int lid : e.line_ids) {
      if (line_ids.count(lid) == 0) throw DataError("entity references missing line");
      if (!used_lines.insert(lid).second) throw DataError("line used by two entities");
    }
    doc.entities.push_back(std::move(e));
  }

  std::set<std::pair<int, int>> seen_links;
  for (const auto& jl : j.at("links")) {
    if (!jl.is_array() || jl.size() != 2) throw DataError("link must be a 2-element array");
    PairLinkAnn link{jl[0].get<int>(), jl[1].get<int>()};
    const EntityAnn* key = doc.entity_by_id(link.key_entity_id);
    const EntityAnn* value = doc.entity_by_id(link.value_entity_id);
    if (key == nullptr || value == nullptr) {
      result->warnings.push_back("doc " + doc.id + ": link references missing entity, skipped");
      ++result->skipped_links;
      continue;
    }
    if (key->category != EntityCategory::question || value->category != EntityCategory::answer) {
      result->warnings.push_back("doc " + doc.id + ": link is not question->answer, skipped");
      ++result->skipped_links;
      continue;
    }
    if (!seen_links.insert({link.key_entity_id, link.value_entity_id}).second) {
      result->warnings.push_back("doc " + doc.id + ": duplicate link collapsed");
      continue;
    }
    doc.links.push_back(link);
  }
  return doc;
}

}  // namespace detail

inline void load_dataset_file(const std::string& path, DatasetLoadResult* result) {
  std::ifstream is(path);
  if (!is) throw DataError("dataset: cannot open " + path);
  Json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw DataError("dataset: invalid JSON in " + path + ": " + e.what());
  }
  if (!j.contains("documents") || !j["documents"].is_array()) {
    throw DataError("dataset: missing top-level \"documents\" array in " + path);
  }
  for (const auto& jd : j["documents"]) {
    try {
      result->documents.push_back(detail::document_from_json(jd, result));
    } catch (const std::exception& e) {
      std::string id = jd.is_object() && jd.contains("id") && jd["id"].is_string()
                           ? jd["id"].get<std::string>()
                           : "<unknown>";
      result->warnings.push_back("doc " + id + ": " + e.what() + ", document skipped");
      ++result->skipped_documents;
    }
  }
}

// Loads a dataset file, or every *.json file (sorted) in a directory.
inline DatasetLoadResult load_dataset(const std::string& path) {
  namespace fs = std::filesystem;
  DatasetLoadResult result;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load_dataset_file(f, &result);
  } else {
    load_dataset_file(path, &result);
  }
  return result;
}

inline void save_dataset(const std::string& path, const std::vector<Document>& docs) {
  Json j;
  j["documents"] = Json::array();
  for (const auto& doc : docs) j["documents"].push_back(detail::document_to_json(doc));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("dataset: cannot write " + path);
  os << j.dump(2) << "\n";
}

struct DatasetStats {
  long documents = 0;
  long lines = 0;
  long entities = 0;
  long multi_line_entities = 0;
  long pairs = 0;
};

inline DatasetStats dataset_stats(const std::vector<Document>& docs) {
  DatasetStats s;
  s.documents = static_cast<long>(docs.size());
  for (const auto& doc : docs) {
    s.lines += static_cast<long>(doc.lines.size());
    s.entities += static_cast<long>(doc.entities.size());
    for (const auto& e : doc.entities) {
      if (e.line_ids.size() >= 2) ++s.multi_line_entities;
    }
    s.pairs += static_cast<long>(doc.links.size());
  }
  return s;
}

}  // namespace peneo
