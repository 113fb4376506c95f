#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "peneo/config.hpp"
#include "peneo/train.hpp"

using namespace peneo;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

SynthSpec tiny_spec(int docs) {
  SynthSpec spec;
  spec.num_docs = docs;
  spec.min_pairs = 2;
  spec.max_pairs = 3;
  spec.multi_line_frac = 0.3;
  return spec;
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.c_e = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.coord_buckets = 16;
  cfg.epochs = 40;
  cfg.eval_every = 10;
  cfg.lr_encoder = 3e-3;
  cfg.lr_decoder = 3e-3;
  return cfg;
}

PeneoModel make_model(const RunConfig& cfg, const Vocab& vocab, std::uint64_t seed) {
  Rng rng(seed);
  return PeneoModel::create(cfg.encoder_config(vocab.size()), cfg.decoder_config(),
                            cfg.loss_config(), vocab, rng);
}

}  // namespace

TEST(TrainPeneo, EmptyCorpusIsFatal) {
  RunConfig cfg = tiny_config();
  Vocab vocab;
  PeneoModel model = make_model(cfg, vocab, 1);
  EXPECT_THROW(train_peneo(model, {}, {}, cfg.train_options()), DataError);
  try {
    train_peneo(model, {}, {}, cfg.train_options());
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "empty training set");
  }
}

TEST(TrainPeneo, LossDropsAndOverfitsMiniCorpus) {
  auto docs = generate_synthetic_corpus(tiny_spec(12), 100);
  Vocab vocab = Vocab::build(docs);
  RunConfig cfg = tiny_config();
  PeneoModel model = make_model(cfg, vocab, 2);
  TrainOptions opts = cfg.train_options();
  opts.epochs = 60;
  TrainResult r = train_peneo(model, docs, docs, opts);
  ASSERT_EQ(r.epoch_losses.size(), 60u);
  // overfit smoke: final loss well below the initial one
  EXPECT_LT(r.epoch_losses.back(), 0.05 * r.epoch_losses.front());
  EXPECT_GT(r.best_valid_f1, 0.9);
}

TEST(TrainPeneo, DeterministicCheckpointBytes) {
  auto docs = generate_synthetic_corpus(tiny_spec(8), 200);
  Vocab vocab = Vocab::build(docs);
  RunConfig cfg = tiny_config();
  cfg.epochs = 5;
  auto run = [&](const char* name) {
    PeneoModel model = make_model(cfg, vocab, 3);
    TrainOptions opts = cfg.train_options();
    train_peneo(model, docs, {}, opts);
    const std::string path = temp_path(name);
    save_peneo_model(path, model);
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::remove(path.c_str());
    std::remove((path + ".meta.json").c_str());
    return bytes;
  };
  EXPECT_EQ(run("peneo_det_a.pene"), run("peneo_det_b.pene"));
}

TEST(PeneoModel, SaveLoadPreservesScores) {
  auto docs = generate_synthetic_corpus(tiny_spec(4), 300);
  Vocab vocab = Vocab::build(docs);
  RunConfig cfg = tiny_config();
  PeneoModel model = make_model(cfg, vocab, 4);
  const std::string path = temp_path("peneo_model_roundtrip.pene");
  save_peneo_model(path, model);
  PeneoModel loaded = load_peneo_model(path);

  TokenizedDoc tok = tokenize(docs[0], vocab);
  RelationScores a = model.scorer()(tok);
  RelationScores b = loaded.scorer()(tok);
  ASSERT_EQ(a.probs.size(), b.probs.size());
  for (std::size_t i = 0; i < a.probs.size(); ++i) EXPECT_EQ(a.probs[i], b.probs[i]);
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}

TEST(SerReModel, SaveLoadPreservesPipelineOutput) {
  auto docs = generate_synthetic_corpus(tiny_spec(4), 301);
  Vocab vocab = Vocab::build(docs);
  RunConfig cfg = tiny_config();
  Rng rng(5);
  SerReModel model = SerReModel::create(cfg.encoder_config(vocab.size()), vocab, rng);
  const std::string path = temp_path("peneo_serre_roundtrip.pene");
  save_serre_model(path, model);
  SerReModel loaded = load_serre_model(path);
  auto a = model.extract_pairs(docs[0], 512);
  auto b = loaded.extract_pairs(docs[0], 512);
  EXPECT_EQ(a, b);
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}

TEST(TrainSerre, LearnsOnEasyCorpus) {
  SynthSpec spec = tiny_spec(16);
  spec.multi_line_frac = 0;  // single-line entities keep the baseline task easy
  spec.interference_frac = 0;
  auto docs = generate_synthetic_corpus(spec, 400);
  Vocab vocab = Vocab::build(docs);
  RunConfig cfg = tiny_config();
  Rng rng(6);
  SerReModel model = SerReModel::create(cfg.encoder_config(vocab.size()), vocab, rng);
  TrainOptions opts = cfg.train_options();
  opts.epochs = 50;
  opts.eval_every = 10;
  TrainResult r = train_serre(model, docs, docs, opts);
  EXPECT_GT(r.best_valid_f1, 0.6);
}

// ---- run configuration -------------------------------------------------------

TEST(RunConfig, DefaultsMirrorPublishedRecipe) {
  RunConfig cfg;
  EXPECT_EQ(cfg.batch_size, 4);
  EXPECT_FLOAT_EQ(cfg.lambda_le, 1.0f);
  EXPECT_FLOAT_EQ(cfg.lambda_elt, 1.0f);
  EXPECT_FLOAT_EQ(cfg.class_weight_negative, 1.0f);
  EXPECT_FLOAT_EQ(cfg.class_weight_positive, 10.0f);
  EXPECT_DOUBLE_EQ(cfg.warmup_ratio, 0.1);
  EXPECT_EQ(cfg.decoder_config().channels(), cfg.c_e / 2);
}

TEST(RunConfig, PaperPreset) {
  RunConfig cfg;
  cfg.set("preset", "paper");
  EXPECT_DOUBLE_EQ(cfg.lr_encoder, 2e-6);
  EXPECT_DOUBLE_EQ(cfg.lr_decoder, 1e-4);
  EXPECT_EQ(cfg.epochs, 650);
}

TEST(RunConfig, FileParsingAndOverrides) {
  const std::string path = temp_path("peneo_cfg.txt");
  {
    std::ofstream os(path);
    os << "# comment line\n";
    os << "c_e = 32\n";
    os << "epochs=7\n";
    os << "pipeline = serre\n";
    os << "seed = 99\n";
  }
  RunConfig cfg = RunConfig::from_file(path);
  EXPECT_EQ(cfg.c_e, 32);
  EXPECT_EQ(cfg.epochs, 7);
  EXPECT_EQ(cfg.pipeline, "serre");
  EXPECT_EQ(cfg.seed, 99u);
  cfg.set("epochs", "9");  // flag override wins
  EXPECT_EQ(cfg.epochs, 9);
  std::remove(path.c_str());
}

TEST(RunConfig, UnknownKeyIsFieldLevelError) {
  RunConfig cfg;
  try {
    cfg.set("not_a_key", "1");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("not_a_key"), std::string::npos);
  }
}

TEST(RunConfig, HashChangesWithConfig) {
  RunConfig a, b;
  EXPECT_EQ(a.config_hash(), b.config_hash());
  b.set("epochs", "123");
  EXPECT_NE(a.config_hash(), b.config_hash());
}

TEST(RunConfig, BadPipelineRejected) {
  RunConfig cfg;
  EXPECT_THROW(cfg.set("pipeline", "nope"), ConfigError);
}
