#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "peneo/corpus.hpp"

using namespace peneo;
namespace fs = std::filesystem;

namespace {

struct RunOutcome {
  int exit_code;
  std::string output;
};

RunOutcome run_cli(const std::string& args) {
  const std::string out_file =
      (fs::temp_directory_path() / "peneo_cli_out.txt").string();
  const std::string cmd = std::string(PENEO_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream is(out_file);
  std::string output((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  int code = -1;
  if (WIFEXITED(status)) code = WEXITSTATUS(status);
  return {code, output};
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = (fs::temp_directory_path() / "peneo_cli_test").string();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return dir_ + "/" + name; }
  std::string dir_;
};

// Shared tiny training config: small model, few epochs.
std::string tiny_flags() {
  return "--config-none";  // placeholder, unused
}

void write_tiny_config(const std::string& path) {
  std::ofstream os(path);
  os << "c_e = 16\nlayers = 1\nheads = 2\ncoord_buckets = 16\n"
     << "epochs = 30\neval_every = 10\nlr_encoder = 3e-3\nlr_decoder = 3e-3\n";
}

}  // namespace

TEST_F(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(run_cli("").exit_code, 1);
}

TEST_F(CliTest, SynthWritesDatasetAndManifest) {
  auto r = run_cli("synth --out " + path("corpus.json") + " --docs 12 --seed 5");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  auto loaded = load_dataset(path("corpus.json"));
  EXPECT_EQ(loaded.documents.size(), 12u);
  EXPECT_TRUE(fs::exists(path("corpus.json.manifest.json")));
}

TEST_F(CliTest, SynthIsByteDeterministic) {
  auto a = run_cli("synth --out " + path("a.json") + " --docs 15 --seed 9");
  auto b = run_cli("synth --out " + path("b.json") + " --docs 15 --seed 9");
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_EQ(file_bytes(path("a.json")), file_bytes(path("b.json")));
}

TEST_F(CliTest, TrainOnEmptyCorpusIsDataError) {
  {
    std::ofstream os(path("empty.json"));
    os << "{\"documents\":[]}";
  }
  auto r = run_cli("train --train " + path("empty.json") + " --out " + path("run"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("empty training set"), std::string::npos);
}

TEST_F(CliTest, GradcheckPassesAndRespectsThreshold) {
  auto ok = run_cli("gradcheck --out " + path("gc"));
  EXPECT_EQ(ok.exit_code, 0) << ok.output;
  EXPECT_NE(ok.output.find("max_rel_error"), std::string::npos);
  // an absurd threshold forces the numeric-failure exit code
  auto fail = run_cli("gradcheck --out " + path("gc2") + " --threshold 1e-18");
  EXPECT_EQ(fail.exit_code, 3);
}

TEST_F(CliTest, RelabelProducesLineLevelFileAndReviewSidecar) {
  // entity-level fixture: a two-line paragraph stored as one block with words
  Json doc;
  doc["id"] = "fix";
  doc["width"] = 200;
  doc["height"] = 100;
  doc["lines"] = Json::array({Json{{"id", 0},
                                   {"text", "12 Fox Road"},
                                   {"bbox", {0, 0, 60, 40}},
                                   {"words",
                                    Json::array({Json{{"text", "12"}, {"bbox", {0, 0, 10, 10}}},
                                                 Json{{"text", "Fox"}, {"bbox", {12, 0, 22, 10}}},
                                                 Json{{"text", "Road"}, {"bbox", {0, 30, 20, 40}}}})}},
                              Json{{"id", 1},
                                   {"text", "Address:"},
                                   {"bbox", {0, 50, 30, 60}},
                                   {"words", Json::array({Json{{"text", "Address:"},
                                                               {"bbox", {0, 50, 30, 60}}}})}}});
  doc["entities"] = Json::array(
      {Json{{"id", 0}, {"category", "answer"}, {"line_ids", {0}}},
       Json{{"id", 1}, {"category", "question"}, {"line_ids", {1}}}});
  doc["links"] = Json::array({Json::array({1, 0})});
  {
    std::ofstream os(path("entity_level.json"));
    os << Json{{"documents", Json::array({doc})}}.dump();
  }
  auto r = run_cli("relabel --in " + path("entity_level.json") + " --out " +
                   path("line_level.json"));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  auto loaded = load_dataset(path("line_level.json"));
  ASSERT_EQ(loaded.documents.size(), 1u);
  EXPECT_EQ(loaded.documents[0].lines.size(), 3u);  // paragraph split into two lines
  EXPECT_TRUE(fs::exists(path("line_level.json.review.json")));
}

TEST_F(CliTest, TrainEvalParseLoop) {
  ASSERT_EQ(run_cli("synth --out " + path("train.json") + " --docs 24 --seed 41").exit_code, 0);
  ASSERT_EQ(run_cli("synth --out " + path("test.json") + " --docs 8 --seed 42").exit_code, 0);
  write_tiny_config(path("cfg.txt"));

  auto train = run_cli("train --config " + path("cfg.txt") + " --train " + path("train.json") +
                       " --out " + path("run") + " --seed 7");
  ASSERT_EQ(train.exit_code, 0) << train.output;
  EXPECT_TRUE(fs::exists(path("run/checkpoint.pene")));
  EXPECT_TRUE(fs::exists(path("run/checkpoint.pene.meta.json")));
  EXPECT_TRUE(fs::exists(path("run/train_log.txt")));
  EXPECT_TRUE(fs::exists(path("run/manifest.json")));

  auto eval = run_cli("eval --ckpt " + path("run/checkpoint.pene") + " --data " +
                      path("test.json") + " --out " + path("eval") + " --seed 7");
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  ASSERT_TRUE(fs::exists(path("eval/report.json")));
  Json report = Json::parse(file_bytes(path("eval/report.json")));
  EXPECT_TRUE(report.at("aggregate").contains("pair_f1"));
  EXPECT_EQ(report.at("per_doc").size(), 8u);

  auto parse = run_cli("parse --ckpt " + path("run/checkpoint.pene") + " --data " +
                       path("test.json") + " --out " + path("parse"));
  ASSERT_EQ(parse.exit_code, 0) << parse.output;
  std::ifstream is(path("parse/parses.jsonl"));
  int lines = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    EXPECT_TRUE(j.contains("doc_id"));
    EXPECT_TRUE(j.contains("pairs"));
    ++lines;
  }
  EXPECT_EQ(lines, 8);

  // gold-matrix mode needs no checkpoint and is perfect by construction
  auto gold = run_cli("eval --gold-matrices --data " + path("test.json") + " --out " +
                      path("gold"));
  ASSERT_EQ(gold.exit_code, 0) << gold.output;
  Json gold_report = Json::parse(file_bytes(path("gold/report.json")));
  EXPECT_DOUBLE_EQ(gold_report.at("aggregate").at("pair_f1").get<double>(), 1.0);
}

TEST_F(CliTest, EvalSubstituteFlagValidation) {
  ASSERT_EQ(run_cli("synth --out " + path("d.json") + " --docs 4 --seed 1").exit_code, 0);
  auto r = run_cli("eval --gold-matrices --data " + path("d.json") + " --out " + path("e") +
                   " --substitute bogus");
  EXPECT_EQ(r.exit_code, 1);
}

TEST_F(CliTest, MissingCheckpointIsDataError) {
  ASSERT_EQ(run_cli("synth --out " + path("d.json") + " --docs 4 --seed 1").exit_code, 0);
  auto r = run_cli("eval --ckpt " + path("nope.pene") + " --data " + path("d.json") + " --out " +
                   path("e"));
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(CliTest, DeterministicTrainAndEvalArtifacts) {
  ASSERT_EQ(run_cli("synth --out " + path("train.json") + " --docs 12 --seed 51").exit_code, 0);
  write_tiny_config(path("cfg.txt"));
  std::ofstream(path("cfg.txt"), std::ios::app) << "epochs = 8\n";

  auto t1 = run_cli("train --config " + path("cfg.txt") + " --train " + path("train.json") +
                    " --out " + path("r1") + " --seed 3");
  auto t2 = run_cli("train --config " + path("cfg.txt") + " --train " + path("train.json") +
                    " --out " + path("r2") + " --seed 3");
  ASSERT_EQ(t1.exit_code, 0);
  ASSERT_EQ(t2.exit_code, 0);
  EXPECT_EQ(file_bytes(path("r1/checkpoint.pene")), file_bytes(path("r2/checkpoint.pene")));

  auto e1 = run_cli("eval --ckpt " + path("r1/checkpoint.pene") + " --data " +
                    path("train.json") + " --out " + path("e1") + " --seed 3");
  auto e2 = run_cli("eval --ckpt " + path("r1/checkpoint.pene") + " --data " +
                    path("train.json") + " --out " + path("e2") + " --seed 3");
  ASSERT_EQ(e1.exit_code, 0);
  ASSERT_EQ(e2.exit_code, 0);
  EXPECT_EQ(file_bytes(path("e1/report.json")), file_bytes(path("e2/report.json")));
}

TEST_F(CliTest, PerturbSweepWritesCsvRows) {
  ASSERT_EQ(run_cli("synth --out " + path("train.json") + " --docs 16 --seed 61").exit_code, 0);
  write_tiny_config(path("cfg.txt"));
  std::ofstream(path("cfg.txt"), std::ios::app) << "epochs = 10\npipeline = serre\n";
  auto train = run_cli("train --config " + path("cfg.txt") + " --train " + path("train.json") +
                       " --out " + path("serre") + " --seed 5");
  ASSERT_EQ(train.exit_code, 0) << train.output;

  auto perturb = run_cli("perturb --ckpt " + path("serre/checkpoint.pene") + " --data " +
                         path("train.json") + " --out " + path("pt") +
                         " --perturb-seeds 2 --seed 5");
  ASSERT_EQ(perturb.exit_code, 0) << perturb.output;
  std::ifstream is(path("pt/perturb.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "error_type,p,precision,recall,f1");
  int rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
  }
  EXPECT_EQ(rows, 24);  // 4 error types x 6 probabilities
}

TEST_F(CliTest, PerturbRequiresSerreCheckpoint) {
  ASSERT_EQ(run_cli("synth --out " + path("train.json") + " --docs 8 --seed 71").exit_code, 0);
  write_tiny_config(path("cfg.txt"));
  std::ofstream(path("cfg.txt"), std::ios::app) << "epochs = 3\n";
  ASSERT_EQ(run_cli("train --config " + path("cfg.txt") + " --train " + path("train.json") +
                    " --out " + path("pe") + " --seed 5")
                .exit_code,
            0);
  auto r = run_cli("perturb --ckpt " + path("pe/checkpoint.pene") + " --data " +
                   path("train.json") + " --out " + path("pt"));
  EXPECT_EQ(r.exit_code, 1);
}
