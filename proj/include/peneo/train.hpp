#pragma once

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "peneo/baseline.hpp"
#include "peneo/checkpoint.hpp"
#include "peneo/decoder.hpp"
#include "peneo/encoder.hpp"
#include "peneo/evalkit.hpp"
#include "peneo/gradcheck.hpp"
#include "peneo/synth.hpp"

namespace peneo {

using EncoderParams = EncoderParamsT<float>;
using DecoderParams = DecoderParamsT<float>;

struct PeneoModel {
  EncoderConfig enc_cfg;
  DecoderConfig dec_cfg;
  LossConfig loss_cfg;
  Vocab vocab;
  std::unique_ptr<EncoderParams> encoder;
  std::unique_ptr<DecoderParams> decoder;

  static PeneoModel create(const EncoderConfig& ec, const DecoderConfig& dc,
                           const LossConfig& lc, Vocab vocab, Rng& rng) {
    PeneoModel m;
    m.enc_cfg = ec;
    m.dec_cfg = dc;
    m.loss_cfg = lc;
    m.vocab = std::move(vocab);
    m.encoder = std::make_unique<EncoderParams>(m.enc_cfg, rng);
    m.decoder = std::make_unique<DecoderParams>(m.dec_cfg, rng);
    return m;
  }

  Scorer scorer() const {
    return [this](const TokenizedDoc& doc) {
      NoGradGuard no_grad;
      Var<float> features = encode(doc, *encoder);
      return decoder_infer(features->value, *decoder);
    };
  }
};

struct SerReModel {
  EncoderConfig enc_cfg;
  Vocab vocab;
  std::unique_ptr<EncoderParams> ser_encoder;
  std::unique_ptr<SerHeadT<float>> ser_head;
  std::unique_ptr<EncoderParams> re_encoder;
  std::unique_ptr<ReHeadT<float>> re_head;

  static SerReModel create(const EncoderConfig& ec, Vocab vocab, Rng& rng) {
    SerReModel m;
    m.enc_cfg = ec;
    m.vocab = std::move(vocab);
    m.ser_encoder = std::make_unique<EncoderParams>(ec, rng, "ser_enc/");
    m.ser_head = std::make_unique<SerHeadT<float>>(ec.c_e, rng, "ser/");
    m.re_encoder = std::make_unique<EncoderParams>(ec, rng, "re_enc/");
    m.re_head = std::make_unique<ReHeadT<float>>(ec.c_e, rng, "re/");
    return m;
  }

  std::vector<PredictedEntity> infer_entities(const TokenizedDoc& sorted_tok) const {
    NoGradGuard no_grad;
    Var<float> features = encode(sorted_tok, *ser_encoder);
    Var<float> logits = const_cast<SerHeadT<float>&>(*ser_head).logits(features);
    return ser_infer(logits->value, sorted_tok);
  }

  std::vector<std::pair<int, int>> infer_links(const TokenizedDoc& sorted_tok,
                                               const std::vector<PredictedEntity>& entities) const {
    NoGradGuard no_grad;
    auto candidates = re_candidates(entities);
    if (candidates.empty()) return {};
    Var<float> features = encode(sorted_tok, *re_encoder);
    Var<float> logits = re_pair_logits(features, entities, candidates,
                                       const_cast<ReHeadT<float>&>(*re_head));
    return re_infer(logits->value, candidates);
  }

  // Full serial pipeline on one (unsorted) document.
  std::vector<std::pair<std::string, std::string>> extract_pairs(const Document& doc,
                                                                 int max_tokens) const {
    Document sorted = sorted_document(doc);
    TokenizedDoc tok = tokenize(sorted, vocab, max_tokens);
    if (tok.size() == 0) return {};
    auto entities = infer_entities(tok);
    auto links = infer_links(tok, entities);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [q, a] : links) {
      out.emplace_back(entities[static_cast<std::size_t>(q)].text,
                       entities[static_cast<std::size_t>(a)].text);
    }
    return out;
  }
};

// ---- training --------------------------------------------------------------

struct TrainOptions {
  int epochs = 100;
  int batch_size = 4;
  int eval_every = 2;  // validation cadence in epochs
  int max_tokens = kDefaultMaxTokens;
  OptimizerConfig encoder_opt;
  OptimizerConfig decoder_opt;
  std::uint64_t seed = 1;
  std::ostream* log = nullptr;
};

struct TrainResult {
  std::vector<double> epoch_losses;
  double best_valid_f1 = -1;
  int best_epoch = -1;
};

namespace detail {

template <class T>
std::vector<TensorT<T>> snapshot_values(const ParamStoreT<T>& store) {
  std::vector<TensorT<T>> out;
  out.reserve(store.slots.size());
  for (const auto& s : store.slots) out.push_back(s->value.clone());
  return out;
}

template <class T>
void restore_values(ParamStoreT<T>& store, const std::vector<TensorT<T>>& snap) {
  for (std::size_t i = 0; i < store.slots.size(); ++i) {
    auto& v = store.slots[i]->value;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = snap[i][k];
  }
}

inline long steps_per_epoch(std::size_t docs, int batch_size) {
  return static_cast<long>((docs + static_cast<std::size_t>(batch_size) - 1) /
                           static_cast<std::size_t>(batch_size));
}

}  // namespace detail

inline TrainResult train_peneo(PeneoModel& model, const std::vector<Document>& train_docs,
                               const std::vector<Document>& valid_docs, TrainOptions opts) {
  if (train_docs.empty()) throw DataError("empty training set");
  struct Item {
    TokenizedDoc tok;
    RelationTargets targets;
  };
  std::vector<Item> items;
  for (const auto& doc : train_docs) {
    Item it;
    it.tok = tokenize(doc, model.vocab, opts.max_tokens);
    if (it.tok.size() == 0) continue;
    it.targets = build_targets(it.tok, doc.entities, doc.links);
    items.push_back(std::move(it));
  }
  if (items.empty()) throw DataError("empty training set");

  const long spe = detail::steps_per_epoch(items.size(), opts.batch_size);
  opts.encoder_opt.total_steps = spe * opts.epochs;
  opts.decoder_opt.total_steps = spe * opts.epochs;

  Rng rng(opts.seed);
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  std::vector<Tensor> best_enc, best_dec;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end = std::min(order.size(), pos + static_cast<std::size_t>(opts.batch_size));
      const float inv_batch = 1.0f / static_cast<float>(batch_end - pos);
      for (std::size_t bi = pos; bi < batch_end; ++bi) {
        const Item& item = items[order[bi]];
        Var<float> features = encode(item.tok, *model.encoder);
        Var<float> h = linear(features, model.decoder->proj_w->var(), model.decoder->proj_b->var());
        Var<float> logits = decoder_logits_var(h, *model.decoder);
        Var<float> loss = peneo_loss(logits, item.targets, model.loss_cfg);
        epoch_loss += static_cast<double>(loss->value[0]);
        backward(scale(loss, inv_batch));
      }
      adamw_step(model.encoder->store, opts.encoder_opt);
      adamw_step(model.decoder->store, opts.decoder_opt);
      pos = batch_end;
    }
    epoch_loss /= static_cast<double>(items.size());
    result.epoch_losses.push_back(epoch_loss);

    const bool last = epoch == opts.epochs;
    if (!valid_docs.empty() && (last || epoch % opts.eval_every == 0)) {
      EvalOptions eopts;
      eopts.max_tokens = opts.max_tokens;
      const double f1 = evaluate_corpus(valid_docs, model.vocab, model.scorer(), eopts).pairs.f1;
      if (f1 > result.best_valid_f1) {
        result.best_valid_f1 = f1;
        result.best_epoch = epoch;
        best_enc = detail::snapshot_values(model.encoder->store);
        best_dec = detail::snapshot_values(model.decoder->store);
      }
      if (opts.log != nullptr) {
        (*opts.log) << "epoch " << epoch << " loss " << epoch_loss << " valid_f1 " << f1 << "\n";
      }
    } else if (opts.log != nullptr) {
      (*opts.log) << "epoch " << epoch << " loss " << epoch_loss << "\n";
    }
  }
  if (!best_enc.empty()) {
    detail::restore_values(model.encoder->store, best_enc);
    detail::restore_values(model.decoder->store, best_dec);
  }
  return result;
}

inline TrainResult train_serre(SerReModel& model, const std::vector<Document>& train_docs,
                               const std::vector<Document>& valid_docs, TrainOptions opts) {
  if (train_docs.empty()) throw DataError("empty training set");
  struct Item {
    Document sorted;
    TokenizedDoc tok;
    std::vector<int> tags;
    std::vector<PredictedEntity> gold_entities;
    std::vector<std::pair<int, int>> candidates;
    std::vector<int> link_targets;
  };
  std::vector<Item> items;
  for (const auto& doc : train_docs) {
    Item it;
    it.sorted = sorted_document(doc);
    it.tok = tokenize(it.sorted, model.vocab, opts.max_tokens);
    if (it.tok.size() == 0) continue;
    it.tags = build_bio_tags(it.tok, it.sorted.entities);
    it.gold_entities = gold_entities_in_tokens(it.tok, it.sorted.entities);
    it.candidates = re_candidates(it.gold_entities);
    // Candidate labels come from the annotated links, matched by first token.
    for (const auto& [q, a] : it.candidates) {
      bool linked = false;
      for (const auto& link : it.sorted.links) {
        const EntityAnn* key = it.sorted.entity_by_id(link.key_entity_id);
        const EntityAnn* value = it.sorted.entity_by_id(link.value_entity_id);
        if (key == nullptr || value == nullptr) continue;
        auto key_span = it.tok.line_spans.find(key->line_ids.front());
        auto value_span = it.tok.line_spans.find(value->line_ids.front());
        if (key_span == it.tok.line_spans.end() || value_span == it.tok.line_spans.end()) continue;
        if (key_span->second.first == it.gold_entities[static_cast<std::size_t>(q)].token_indices.front() &&
            value_span->second.first == it.gold_entities[static_cast<std::size_t>(a)].token_indices.front()) {
          linked = true;
          break;
        }
      }
      it.link_targets.push_back(linked ? 1 : 0);
    }
    items.push_back(std::move(it));
  }
  if (items.empty()) throw DataError("empty training set");

  const long spe = detail::steps_per_epoch(items.size(), opts.batch_size);
  OptimizerConfig ser_enc_opt = opts.encoder_opt;
  OptimizerConfig ser_head_opt = opts.decoder_opt;
  OptimizerConfig re_enc_opt = opts.encoder_opt;
  OptimizerConfig re_head_opt = opts.decoder_opt;
  ser_enc_opt.total_steps = ser_head_opt.total_steps = spe * opts.epochs;
  re_enc_opt.total_steps = re_head_opt.total_steps = spe * opts.epochs;

  const Tensor tag_weights = Tensor::full({kNumBioTags}, 1.0f);
  const Tensor link_weights = Tensor::from_values({2}, {1.0f, 2.0f});

  TrainResult result;
  Rng rng(opts.seed);
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Phase 1: SER (token tagging on the sorted sequence).
  double best_ser = -1;
  std::vector<Tensor> best_ser_enc, best_ser_head;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end = std::min(order.size(), pos + static_cast<std::size_t>(opts.batch_size));
      const float inv_batch = 1.0f / static_cast<float>(batch_end - pos);
      for (std::size_t bi = pos; bi < batch_end; ++bi) {
        const Item& item = items[order[bi]];
        Var<float> features = encode(item.tok, *model.ser_encoder);
        Var<float> logits = model.ser_head->logits(features);
        Var<float> loss = softmax_ce_weighted(logits, item.tags, tag_weights);
        epoch_loss += static_cast<double>(loss->value[0]);
        backward(scale(loss, inv_batch));
      }
      adamw_step(model.ser_encoder->store, ser_enc_opt);
      adamw_step(model.ser_head->store, ser_head_opt);
      pos = batch_end;
    }
    epoch_loss /= static_cast<double>(items.size());
    if (opts.log != nullptr) (*opts.log) << "ser epoch " << epoch << " loss " << epoch_loss << "\n";

    const bool last = epoch == opts.epochs;
    if (!valid_docs.empty() && (last || epoch % opts.eval_every == 0)) {
      // Entity-level exact-span F1 against the BIO-derivable ground truth.
      long tp = 0, np = 0, ng = 0;
      for (const auto& doc : valid_docs) {
        Document sorted = sorted_document(doc);
        TokenizedDoc tok = tokenize(sorted, model.vocab, opts.max_tokens);
        if (tok.size() == 0) continue;
        auto pred = model.infer_entities(tok);
        auto tags = build_bio_tags(tok, sorted.entities);
        TensorT<float> gold_logits({tok.size(), kNumBioTags});
        for (int t = 0; t < tok.size(); ++t) gold_logits.at(t, tags[static_cast<std::size_t>(t)]) = 10.0f;
        auto gold = ser_infer(gold_logits, tok);
        np += static_cast<long>(pred.size());
        ng += static_cast<long>(gold.size());
        for (const auto& p : pred) {
          for (const auto& g : gold) {
            if (p.category == g.category && p.token_indices == g.token_indices) {
              ++tp;
              break;
            }
          }
        }
      }
      const double f1 = PairF1Report::from_counts(tp, np, ng).f1;
      if (opts.log != nullptr) (*opts.log) << "ser valid_f1 " << f1 << "\n";
      if (f1 > best_ser) {
        best_ser = f1;
        best_ser_enc = detail::snapshot_values(model.ser_encoder->store);
        best_ser_head = detail::snapshot_values(model.ser_head->store);
      }
    }
  }
  if (!best_ser_enc.empty()) {
    detail::restore_values(model.ser_encoder->store, best_ser_enc);
    detail::restore_values(model.ser_head->store, best_ser_head);
  }

  // Phase 2: RE on gold entities; best checkpoint by full-pipeline pair F1.
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end = std::min(order.size(), pos + static_cast<std::size_t>(opts.batch_size));
      const float inv_batch = 1.0f / static_cast<float>(batch_end - pos);
      for (std::size_t bi = pos; bi < batch_end; ++bi) {
        const Item& item = items[order[bi]];
        if (item.candidates.empty()) continue;
        Var<float> features = encode(item.tok, *model.re_encoder);
        Var<float> logits = re_pair_logits(features, item.gold_entities, item.candidates,
                                           *model.re_head);
        Var<float> loss = softmax_ce_weighted(logits, item.link_targets, link_weights);
        epoch_loss += static_cast<double>(loss->value[0]);
        backward(scale(loss, inv_batch));
      }
      adamw_step(model.re_encoder->store, re_enc_opt);
      adamw_step(model.re_head->store, re_head_opt);
      pos = batch_end;
    }
    epoch_loss /= static_cast<double>(items.size());
    result.epoch_losses.push_back(epoch_loss);
    if (opts.log != nullptr) (*opts.log) << "re epoch " << epoch << " loss " << epoch_loss << "\n";

    const bool last = epoch == opts.epochs;
    if (!valid_docs.empty() && (last || epoch % opts.eval_every == 0)) {
      long tp = 0, np = 0, ng = 0;
      for (const auto& doc : valid_docs) {
        auto pred = model.extract_pairs(doc, opts.max_tokens);
        auto r = pair_f1(pred, gold_pairs(doc));
        tp += r.true_positives;
        np += r.num_predicted;
        ng += r.num_gold;
      }
      const double f1 = PairF1Report::from_counts(tp, np, ng).f1;
      if (opts.log != nullptr) (*opts.log) << "serre valid_f1 " << f1 << "\n";
      if (f1 > result.best_valid_f1) {
        result.best_valid_f1 = f1;
        result.best_epoch = epoch;
        best_ser_enc = detail::snapshot_values(model.re_encoder->store);
        best_ser_head = detail::snapshot_values(model.re_head->store);
      }
    }
  }
  if (result.best_epoch >= 0) {
    detail::restore_values(model.re_encoder->store, best_ser_enc);
    detail::restore_values(model.re_head->store, best_ser_head);
  }
  return result;
}

// ---- model persistence -------------------------------------------------------

namespace detail {

inline Json encoder_cfg_json(const EncoderConfig& c) {
  return Json{{"vocab_size", c.vocab_size}, {"c_e", c.c_e},       {"layers", c.layers},
              {"heads", c.heads},           {"coord_buckets", c.coord_buckets}};
}

inline EncoderConfig encoder_cfg_from_json(const Json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.c_e = j.at("c_e").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.coord_buckets = j.at("coord_buckets").get<int>();
  return c;
}

inline Json vocab_json(const Vocab& v) {
  // Skip the two fixed sentinels; they are re-created by the constructor.
  Json words = Json::array();
  for (std::size_t i = 2; i < v.words.size(); ++i) words.push_back(v.words[i]);
  return words;
}

inline Vocab vocab_from_json(const Json& j) {
  Vocab v;
  for (const auto& w : j) v.add(w.get<std::string>());
  return v;
}

}  // namespace detail

inline void save_peneo_model(const std::string& path, const PeneoModel& model) {
  ckpt::NamedTensors tensors;
  for (const auto& s : model.encoder->store.slots) tensors.emplace_back(s->name, s->value);
  for (const auto& s : model.decoder->store.slots) tensors.emplace_back(s->name, s->value);
  ckpt::save(path, tensors);

  Json meta;
  meta["pipeline"] = "peneo";
  meta["encoder"] = detail::encoder_cfg_json(model.enc_cfg);
  meta["decoder"] = Json{{"c_e", model.dec_cfg.c_e},
                         {"c_d", model.dec_cfg.channels()},
                         {"block_rows", model.dec_cfg.block_rows}};
  meta["loss"] = Json{{"lambdas", model.loss_cfg.lambdas},
                      {"class_weight_negative", model.loss_cfg.class_weight_negative},
                      {"class_weight_positive", model.loss_cfg.class_weight_positive}};
  meta["vocab"] = detail::vocab_json(model.vocab);
  std::ofstream os(path + ".meta.json", std::ios::binary);
  if (!os) throw DataError("cannot write " + path + ".meta.json");
  os << meta.dump(2) << "\n";
}

inline PeneoModel load_peneo_model(const std::string& path) {
  std::ifstream is(path + ".meta.json");
  if (!is) throw DataError("missing model meta file " + path + ".meta.json");
  Json meta;
  is >> meta;
  if (meta.at("pipeline").get<std::string>() != "peneo") {
    throw DataError("checkpoint is not a peneo model");
  }
  EncoderConfig ec = detail::encoder_cfg_from_json(meta.at("encoder"));
  DecoderConfig dc;
  dc.c_e = meta.at("decoder").at("c_e").get<int>();
  dc.c_d = meta.at("decoder").at("c_d").get<int>();
  dc.block_rows = meta.at("decoder").at("block_rows").get<int>();
  LossConfig lc;
  auto lambdas = meta.at("loss").at("lambdas").get<std::vector<float>>();
  for (int h = 0; h < kNumHeads; ++h) lc.lambdas[static_cast<std::size_t>(h)] = lambdas.at(static_cast<std::size_t>(h));
  lc.class_weight_negative = meta.at("loss").at("class_weight_negative").get<float>();
  lc.class_weight_positive = meta.at("loss").at("class_weight_positive").get<float>();
  Vocab vocab = detail::vocab_from_json(meta.at("vocab"));

  Rng rng(0);
  PeneoModel model = PeneoModel::create(ec, dc, lc, std::move(vocab), rng);
  auto tensors = ckpt::load(path);
  load_param_store(tensors, model.encoder->store);
  load_param_store(tensors, model.decoder->store);
  return model;
}

inline void save_serre_model(const std::string& path, const SerReModel& model) {
  ckpt::NamedTensors tensors;
  for (const auto& s : model.ser_encoder->store.slots) tensors.emplace_back(s->name, s->value);
  for (const auto& s : model.ser_head->store.slots) tensors.emplace_back(s->name, s->value);
  for (const auto& s : model.re_encoder->store.slots) tensors.emplace_back(s->name, s->value);
  for (const auto& s : model.re_head->store.slots) tensors.emplace_back(s->name, s->value);
  ckpt::save(path, tensors);

  Json meta;
  meta["pipeline"] = "serre";
  meta["encoder"] = detail::encoder_cfg_json(model.enc_cfg);
  meta["vocab"] = detail::vocab_json(model.vocab);
  std::ofstream os(path + ".meta.json", std::ios::binary);
  if (!os) throw DataError("cannot write " + path + ".meta.json");
  os << meta.dump(2) << "\n";
}

inline SerReModel load_serre_model(const std::string& path) {
  std::ifstream is(path + ".meta.json");
  if (!is) throw DataError("missing model meta file " + path + ".meta.json");
  Json meta;
  is >> meta;
  if (meta.at("pipeline").get<std::string>() != "serre") {
    throw DataError("checkpoint is not a serre model");
  }
  EncoderConfig ec = detail::encoder_cfg_from_json(meta.at("encoder"));
  Vocab vocab = detail::vocab_from_json(meta.at("vocab"));
  Rng rng(0);
  SerReModel model = SerReModel::create(ec, std::move(vocab), rng);
  auto tensors = ckpt::load(path);
  load_param_store(tensors, model.ser_encoder->store);
  load_param_store(tensors, model.ser_head->store);
  load_param_store(tensors, model.re_encoder->store);
  load_param_store(tensors, model.re_head->store);
  return model;
}

}  // namespace peneo
