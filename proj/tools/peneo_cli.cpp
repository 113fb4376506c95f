// Command-line front end: train/eval/parse/perturb/relabel/synth/gradcheck.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peneo/config.hpp"
#include "peneo/evalkit.hpp"
#include "peneo/link_parser.hpp"
#include "peneo/relabel.hpp"
#include "peneo/synth.hpp"
#include "peneo/train.hpp"

namespace {

namespace fs = std::filesystem;
using namespace peneo;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << j.dump(2) << "\n";
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& args, Clock::time_point start) {
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir + "/manifest.json", run_manifest(command, args, cfg, ms_since(start)));
}

// For commands whose primary output is a single file.
void write_manifest_beside(const std::string& file_path, const RunConfig& cfg,
                           const std::string& command, const std::vector<std::string>& args,
                           Clock::time_point start) {
  write_json(file_path + ".manifest.json", run_manifest(command, args, cfg, ms_since(start)));
}

std::vector<Document> load_docs(const std::string& path, bool warn = true) {
  if (path.empty()) throw ConfigError("no dataset path given");
  DatasetLoadResult r = load_dataset(path);
  if (warn) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  }
  return std::move(r.documents);
}

// Hold out every tenth document when no explicit validation split exists.
void split_validation(std::vector<Document>* train, std::vector<Document>* valid) {
  std::vector<Document> tr, va;
  for (std::size_t i = 0; i < train->size(); ++i) {
    if (i % 10 == 9) {
      va.push_back(std::move((*train)[i]));
    } else {
      tr.push_back(std::move((*train)[i]));
    }
  }
  *train = std::move(tr);
  *valid = std::move(va);
}

int cmd_train(const RunConfig& cfg, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  std::vector<Document> train_docs = load_docs(cfg.train_path);
  std::vector<Document> valid_docs;
  if (!cfg.valid_path.empty()) {
    valid_docs = load_docs(cfg.valid_path);
  } else {
    split_validation(&train_docs, &valid_docs);
  }
  if (train_docs.empty()) throw DataError("empty training set");

  Vocab vocab = Vocab::build(train_docs);
  Rng rng(cfg.seed);
  TrainOptions topts = cfg.train_options();
  fs::create_directories(cfg.out_dir);
  std::ofstream log(cfg.out_dir + "/train_log.txt");
  topts.log = &log;

  const std::string ckpt_path = cfg.out_dir + "/checkpoint.pene";
  if (cfg.pipeline == "peneo") {
    PeneoModel model = PeneoModel::create(cfg.encoder_config(vocab.size()),
                                          cfg.decoder_config(), cfg.loss_config(),
                                          std::move(vocab), rng);
    TrainResult r = train_peneo(model, train_docs, valid_docs, topts);
    save_peneo_model(ckpt_path, model);
    std::cout << "trained peneo: best_valid_f1 " << r.best_valid_f1 << " at epoch "
              << r.best_epoch << "\n";
  } else {
    SerReModel model = SerReModel::create(cfg.encoder_config(vocab.size()), std::move(vocab), rng);
    TrainResult r = train_serre(model, train_docs, valid_docs, topts);
    save_serre_model(ckpt_path, model);
    std::cout << "trained serre: best_valid_f1 " << r.best_valid_f1 << " at epoch "
              << r.best_epoch << "\n";
  }
  std::cout << "checkpoint: " << ckpt_path << "\n";
  write_manifest(cfg, "train", args, start);
  return 0;
}

std::string detect_pipeline(const std::string& ckpt_path) {
  std::ifstream is(ckpt_path + ".meta.json");
  if (!is) throw DataError("missing model meta file " + ckpt_path + ".meta.json");
  Json meta;
  is >> meta;
  return meta.at("pipeline").get<std::string>();
}

struct EvalFlags {
  std::string ckpt;
  std::string data;
  std::string substitute = "none";
  bool gold_matrices = false;
  std::string ser_file;  // external SER predictions (serre pipeline)
};

CorpusEval eval_serre_corpus(const SerReModel& model, const std::vector<Document>& docs,
                             const RunConfig& cfg, const std::string& ser_file) {
  std::map<std::string, Json> imported;
  if (!ser_file.empty()) {
    std::ifstream is(ser_file);
    if (!is) throw DataError("cannot open SER predictions " + ser_file);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      Json j = Json::parse(line);
      imported[j.at("doc_id").get<std::string>()] = j;
    }
  }

  CorpusEval out;
  long tp = 0, np = 0, ng = 0;
  for (const auto& doc : docs) {
    DocEval de;
    de.doc_id = doc.id;
    std::vector<std::pair<std::string, std::string>> pred;
    Document sorted = sorted_document(doc);
    TokenizedDoc tok = tokenize(sorted, model.vocab, cfg.max_tokens);
    if (tok.size() > 0) {
      std::vector<PredictedEntity> entities;
      if (!ser_file.empty()) {
        auto it = imported.find(doc.id);
        if (it == imported.end()) throw DataError("SER predictions missing doc " + doc.id);
        entities = ser_entities_from_json(it->second, tok);
      } else {
        entities = model.infer_entities(tok);
      }
      for (const auto& [q, a] : model.infer_links(tok, entities)) {
        pred.emplace_back(entities[static_cast<std::size_t>(q)].text,
                          entities[static_cast<std::size_t>(a)].text);
      }
    }
    de.pairs = pair_f1(pred, gold_pairs(doc));
    tp += de.pairs.true_positives;
    np += de.pairs.num_predicted;
    ng += de.pairs.num_gold;
    out.per_doc.push_back(std::move(de));
  }
  out.pairs = PairF1Report::from_counts(tp, np, ng);
  return out;
}

int cmd_eval(RunConfig cfg, const EvalFlags& flags, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const std::string data_path = !flags.data.empty() ? flags.data : cfg.test_path;
  std::vector<Document> docs = load_docs(data_path);
  fs::create_directories(cfg.out_dir);

  CorpusEval eval;
  if (flags.gold_matrices) {
    EvalOptions opts;
    opts.gold_matrices = true;
    opts.threads = cfg.threads;
    opts.max_tokens = cfg.max_tokens;
    Vocab vocab = Vocab::build(docs);
    eval = evaluate_corpus(docs, vocab, Scorer{}, opts);
  } else {
    if (flags.ckpt.empty()) throw ConfigError("eval needs --ckpt or --gold-matrices");
    const std::string pipeline = detect_pipeline(flags.ckpt);
    if (pipeline == "serre") {
      if (flags.substitute != "none") {
        throw ConfigError("--substitute applies to the peneo pipeline only");
      }
      SerReModel model = load_serre_model(flags.ckpt);
      eval = eval_serre_corpus(model, docs, cfg, flags.ser_file);
    } else {
      PeneoModel model = load_peneo_model(flags.ckpt);
      EvalOptions opts;
      opts.substitute = SubstituteSet::parse(flags.substitute);
      opts.threads = cfg.threads;
      opts.max_tokens = cfg.max_tokens;
      Scorer scorer = model.scorer();
      if (!cfg.features_path.empty()) {
        auto features = std::make_shared<ckpt::NamedTensors>(ckpt::load(cfg.features_path));
        const int c_e = model.enc_cfg.c_e;
        const DecoderParams* dec = model.decoder.get();
        scorer = [features, c_e, dec](const TokenizedDoc& tok) {
          Tensor f;
          const auto status = load_external_features(*features, tok.doc_id, tok.size(), c_e, &f);
          if (status != FeatureLoadStatus::ok) {
            std::cerr << "warning: features "
                      << (status == FeatureLoadStatus::missing_document ? "missing"
                                                                        : "shape mismatch")
                      << " for doc " << tok.doc_id << ", document skipped\n";
            return RelationScores{};
          }
          return decoder_infer(f, *dec);
        };
      }
      eval = evaluate_corpus(docs, model.vocab, scorer, opts);
    }
  }

  write_json(cfg.out_dir + "/report.json", metrics_report_json(eval, cfg.config_hash(), cfg.seed));
  std::cout << "pair_f1 " << eval.pairs.f1 << " over " << docs.size() << " docs\n";
  write_manifest(cfg, "eval", args, start);
  return 0;
}

int cmd_parse(RunConfig cfg, const EvalFlags& flags, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const std::string data_path = !flags.data.empty() ? flags.data : cfg.test_path;
  std::vector<Document> docs = load_docs(data_path);
  fs::create_directories(cfg.out_dir);

  Vocab vocab;
  std::unique_ptr<PeneoModel> model;
  if (flags.gold_matrices) {
    vocab = Vocab::build(docs);
  } else {
    if (flags.ckpt.empty()) throw ConfigError("parse needs --ckpt or --gold-matrices");
    if (detect_pipeline(flags.ckpt) != "peneo") {
      throw ConfigError("parse supports the peneo pipeline only");
    }
    model = std::make_unique<PeneoModel>(load_peneo_model(flags.ckpt));
    vocab = model->vocab;
  }

  std::ofstream os(cfg.out_dir + "/parses.jsonl", std::ios::binary);
  if (!os) throw DataError("cannot write parses.jsonl");
  for (const auto& doc : docs) {
    TokenizedDoc tok = tokenize(doc, vocab, cfg.max_tokens);
    std::vector<ParsedPair> pairs;
    if (tok.size() > 0) {
      RelationScores scores;
      RelationMatrices matrices;
      if (flags.gold_matrices) {
        RelationTargets targets = build_targets(tok, doc.entities, doc.links);
        matrices = targets;
        scores = scores_from_matrices(targets);
      } else {
        scores = model->scorer()(tok);
        matrices = decode(scores);
      }
      pairs = parse_links(build_best_maps(matrices, scores), tok);
    }
    os << parsed_pairs_to_json(doc.id, pairs).dump() << "\n";
  }
  std::cout << "wrote parses for " << docs.size() << " docs\n";
  write_manifest(cfg, "parse", args, start);
  return 0;
}

struct PerturbFlags {
  std::string ckpt;
  std::string data;
  std::string probs = "0,0.1,0.2,0.3,0.4,0.5";
  std::string types = "FN,FP,CE,EF";
  int seeds = 3;
  std::string export_gold_ser;
};

int cmd_perturb(RunConfig cfg, const PerturbFlags& flags, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  const std::string data_path = !flags.data.empty() ? flags.data : cfg.test_path;
  std::vector<Document> docs = load_docs(data_path);
  if (flags.ckpt.empty()) throw ConfigError("perturb needs a serre --ckpt");
  if (detect_pipeline(flags.ckpt) != "serre") {
    throw ConfigError("perturb expects a serre checkpoint (fixed RE module)");
  }
  SerReModel model = load_serre_model(flags.ckpt);
  fs::create_directories(cfg.out_dir);

  struct Prepared {
    const Document* doc;
    TokenizedDoc tok;
    std::vector<PredictedEntity> gold_entities;
    std::vector<std::pair<std::string, std::string>> gold;
  };
  std::vector<Prepared> prepared;
  for (const auto& doc : docs) {
    Prepared p;
    p.doc = &doc;
    Document sorted = sorted_document(doc);
    p.tok = tokenize(sorted, model.vocab, cfg.max_tokens);
    if (p.tok.size() == 0) continue;
    p.gold_entities = gold_entities_in_tokens(p.tok, sorted.entities);
    p.gold = gold_pairs(doc);
    prepared.push_back(std::move(p));
  }

  if (!flags.export_gold_ser.empty()) {
    std::ofstream os(flags.export_gold_ser, std::ios::binary);
    if (!os) throw DataError("cannot write " + flags.export_gold_ser);
    for (const auto& p : prepared) {
      os << ser_entities_to_json(p.doc->id, p.gold_entities).dump() << "\n";
    }
  }

  std::vector<double> probs;
  for (const auto& tok : Vocab::split_whitespace([&] {
         std::string s = flags.probs;
         for (auto& c : s) {
           if (c == ',') c = ' ';
         }
         return s;
       }())) {
    probs.push_back(std::stod(tok));
  }
  std::vector<SerError> types;
  for (const auto& tok : Vocab::split_whitespace([&] {
         std::string s = flags.types;
         for (auto& c : s) {
           if (c == ',') c = ' ';
         }
         return s;
       }())) {
    auto t = ser_error_from_name(tok);
    if (!t) throw ConfigError("unknown perturbation type " + tok);
    types.push_back(*t);
  }

  std::ofstream csv(cfg.out_dir + "/perturb.csv", std::ios::binary);
  if (!csv) throw DataError("cannot write perturb.csv");
  csv << "error_type,p,precision,recall,f1\n";
  for (SerError type : types) {
    for (double p : probs) {
      double sum_p = 0, sum_r = 0, sum_f1 = 0;
      for (int s = 0; s < flags.seeds; ++s) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(s) * 0x9e3779b9ULL);
        long tp = 0, np = 0, ng = 0;
        for (const auto& item : prepared) {
          auto entities = inject_ser_errors(item.gold_entities, type, p, rng);
          refresh_entity_texts(item.tok, &entities);
          std::vector<std::pair<std::string, std::string>> pred;
          for (const auto& [q, a] : model.infer_links(item.tok, entities)) {
            pred.emplace_back(entities[static_cast<std::size_t>(q)].text,
                              entities[static_cast<std::size_t>(a)].text);
          }
          auto r = pair_f1(pred, item.gold);
          tp += r.true_positives;
          np += r.num_predicted;
          ng += r.num_gold;
        }
        auto r = PairF1Report::from_counts(tp, np, ng);
        sum_p += r.precision;
        sum_r += r.recall;
        sum_f1 += r.f1;
      }
      const double k = static_cast<double>(flags.seeds);
      csv << ser_error_name(type) << "," << p << "," << sum_p / k << "," << sum_r / k << ","
          << sum_f1 / k << "\n";
    }
  }
  std::cout << "wrote perturb.csv (" << types.size() * probs.size() << " rows)\n";
  write_manifest(cfg, "perturb", args, start);
  return 0;
}

int cmd_relabel(RunConfig cfg, const std::string& in_path, const std::string& out_path,
                const std::vector<std::string>& args) {
  const auto start = Clock::now();
  std::vector<Document> docs = load_docs(in_path);
  RelabelResult r = relabel_dataset(docs);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  save_dataset(out_path, r.documents);
  save_review_sidecar(out_path + ".review.json", r.flags);
  std::cout << "relabeled " << r.documents.size() << " docs, " << r.flags.size()
            << " flagged splits\n";
  write_manifest_beside(out_path, cfg, "relabel", args, start);
  return 0;
}

struct SynthFlags {
  std::string out;
  SynthSpec spec;
};

int cmd_synth(RunConfig cfg, const SynthFlags& flags, const std::vector<std::string>& args) {
  const auto start = Clock::now();
  if (flags.out.empty()) throw ConfigError("synth needs --out");
  auto docs = generate_synthetic_corpus(flags.spec, cfg.seed);
  save_dataset(flags.out, docs);
  DatasetStats stats = dataset_stats(docs);
  std::cout << "wrote " << stats.documents << " docs, " << stats.entities << " entities ("
            << stats.multi_line_entities << " multi-line), " << stats.pairs << " pairs\n";
  write_manifest_beside(flags.out, cfg, "synth", args, start);
  return 0;
}

struct GradCheckFlags {
  int n_docs = 2;
  int c_e = 12;
  double threshold = 1e-3;
  double epsilon = 1e-5;
};

int cmd_gradcheck(RunConfig cfg, const GradCheckFlags& flags,
                  const std::vector<std::string>& args) {
  const auto start = Clock::now();
  SynthSpec spec;
  spec.num_docs = flags.n_docs;
  spec.min_pairs = 2;
  spec.max_pairs = 3;
  spec.multi_line_frac = 0.5;
  spec.max_tokens_per_doc = 12;
  auto docs = generate_synthetic_corpus(spec, cfg.seed);
  Vocab vocab = Vocab::build(docs);

  // The checker runs the whole pipeline in double precision.
  EncoderConfig ec;
  ec.vocab_size = vocab.size();
  ec.c_e = flags.c_e;
  ec.layers = 1;
  ec.heads = 2;
  ec.coord_buckets = 8;
  DecoderConfig dc;
  dc.c_e = flags.c_e;
  Rng rng(cfg.seed + 1);
  EncoderParamsT<double> enc(ec, rng);
  DecoderParamsT<double> dec(dc, rng);
  LossConfig lc = cfg.loss_config();

  struct Fixture {
    TokenizedDoc tok;
    RelationTargets targets;
  };
  std::vector<Fixture> fixtures;
  for (const auto& doc : docs) {
    Fixture f;
    f.tok = tokenize(doc, vocab, spec.max_tokens_per_doc);
    if (f.tok.size() == 0) continue;
    f.targets = build_targets(f.tok, doc.entities, doc.links);
    fixtures.push_back(std::move(f));
  }
  if (fixtures.empty()) throw DataError("gradcheck: no usable fixtures");

  ParamStoreT<double> merged;
  for (auto& s : enc.store.slots) merged.slots.push_back(s);
  for (auto& s : dec.store.slots) merged.slots.push_back(s);

  auto loss_fn = [&]() {
    double total = 0;
    for (const auto& f : fixtures) {
      Var<double> features = encode(f.tok, enc);
      Var<double> h = linear(features, dec.proj_w->var(), dec.proj_b->var());
      Var<double> logits = decoder_logits_var(h, dec);
      Var<double> loss = peneo_loss(logits, f.targets, lc);
      backward(loss);
      total += loss->value[0];
    }
    return total;
  };

  GradCheckOptions opts;
  opts.epsilon = flags.epsilon;
  opts.max_coords_per_tensor = 64;
  GradCheckReport report = grad_check<double>(loss_fn, merged, opts);
  std::cout << "gradcheck: max_rel_error " << report.max_rel_error << " over "
            << report.coords_checked << " coordinates (worst: " << report.worst_param << "["
            << report.worst_coord << "] analytic " << report.worst_analytic << " numeric "
            << report.worst_numeric << ")\n";
  write_manifest(cfg, "gradcheck", args, start);
  if (!(report.max_rel_error <= flags.threshold)) {
    std::cerr << "gradcheck FAILED: " << report.max_rel_error << " > " << flags.threshold << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PEneo pair extraction toolkit"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv + 1, argv + argc);

  RunConfig cfg;
  std::string config_path;
  std::string seed_override, out_override, pipeline_override, threads_override;

  auto add_common = [&](CLI::App* sub, bool with_out_dir = true) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--seed", seed_override, "seed override");
    sub->add_option("--threads", threads_override, "worker threads for evaluation");
    if (with_out_dir) sub->add_option("--out", out_override, "output directory override");
  };

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train);
  train->add_option("--pipeline", pipeline_override, "peneo|serre");
  std::string train_data, valid_data;
  train->add_option("--train", train_data, "training dataset path");
  train->add_option("--valid", valid_data, "validation dataset path");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  EvalFlags eflags;
  eval->add_option("--ckpt", eflags.ckpt, "checkpoint path");
  eval->add_option("--data", eflags.data, "dataset path");
  eval->add_option("--substitute", eflags.substitute, "none|le|lg|both (peneo)");
  eval->add_flag("--gold-matrices", eflags.gold_matrices, "score gold matrices, no model");
  eval->add_option("--ser-file", eflags.ser_file, "external SER predictions (serre)");
  eval->add_option("--features", cfg.features_path, "external feature container (peneo)");

  auto* parse = app.add_subcommand("parse", "write parsed key-value pairs");
  add_common(parse);
  EvalFlags pflags;
  parse->add_option("--ckpt", pflags.ckpt, "checkpoint path");
  parse->add_option("--data", pflags.data, "dataset path");
  parse->add_flag("--gold-matrices", pflags.gold_matrices, "parse gold matrices, no model");

  auto* perturb = app.add_subcommand("perturb", "SER error-accumulation sweep");
  add_common(perturb);
  PerturbFlags zflags;
  perturb->add_option("--ckpt", zflags.ckpt, "serre checkpoint");
  perturb->add_option("--data", zflags.data, "dataset path");
  perturb->add_option("--probs", zflags.probs, "comma-separated probabilities");
  perturb->add_option("--types", zflags.types, "comma-separated subset of FN,FP,CE,EF");
  perturb->add_option("--perturb-seeds", zflags.seeds, "seeds to average");
  perturb->add_option("--export-gold-ser", zflags.export_gold_ser,
                      "write gold SER entities as JSONL");

  auto* relabel = app.add_subcommand("relabel", "entity-level to line-level annotations");
  add_common(relabel, false);
  std::string rel_in, rel_out;
  relabel->add_option("--in", rel_in, "entity-level dataset")->required();
  relabel->add_option("--out", rel_out, "line-level output path")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth, false);
  SynthFlags sflags;
  synth->add_option("--out", sflags.out, "output dataset path")->required();
  synth->add_option("--docs", sflags.spec.num_docs, "number of documents");
  synth->add_option("--min-pairs", sflags.spec.min_pairs, "min pairs per doc");
  synth->add_option("--max-pairs", sflags.spec.max_pairs, "max pairs per doc");
  synth->add_option("--multi-line-frac", sflags.spec.multi_line_frac,
                    "fraction of multi-line values");
  synth->add_option("--interference-frac", sflags.spec.interference_frac,
                    "fraction of multi-line values with a wedged line");
  synth->add_option("--two-column-frac", sflags.spec.two_column_frac, "two-column page fraction");
  synth->add_option("--max-doc-tokens", sflags.spec.max_tokens_per_doc, "token budget per doc");
  bool no_shuffle = false;
  synth->add_flag("--no-shuffle", no_shuffle, "keep generation order of lines");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck);
  GradCheckFlags gflags;
  gradcheck->add_option("--docs", gflags.n_docs, "fixture documents");
  gradcheck->add_option("--c-e", gflags.c_e, "encoder width");
  gradcheck->add_option("--threshold", gflags.threshold, "failure threshold");
  gradcheck->add_option("--epsilon", gflags.epsilon, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) cfg.update_from_file(config_path);
    if (!seed_override.empty()) cfg.set("seed", seed_override);
    if (!out_override.empty()) cfg.set("out_dir", out_override);
    if (!pipeline_override.empty()) cfg.set("pipeline", pipeline_override);
    if (!threads_override.empty()) cfg.set("threads", threads_override);
    if (!train_data.empty()) cfg.set("train", train_data);
    if (!valid_data.empty()) cfg.set("valid", valid_data);
    sflags.spec.shuffle_lines = !no_shuffle;

    if (train->parsed()) return cmd_train(cfg, args);
    if (eval->parsed()) return cmd_eval(cfg, eflags, args);
    if (parse->parsed()) return cmd_parse(cfg, pflags, args);
    if (perturb->parsed()) return cmd_perturb(cfg, zflags, args);
    if (relabel->parsed()) return cmd_relabel(cfg, rel_in, rel_out, args);
    if (synth->parsed()) return cmd_synth(cfg, sflags, args);
    if (gradcheck->parsed()) return cmd_gradcheck(cfg, gflags, args);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
