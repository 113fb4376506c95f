#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "peneo/corpus.hpp"
#include "peneo/decoder.hpp"
#include "peneo/encoder.hpp"
#include "peneo/optim.hpp"
#include "peneo/synth.hpp"
#include "peneo/train.hpp"

namespace peneo {

// Flat key=value run configuration. File values are applied in order;
// command-line flags override file values.
struct RunConfig {
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string pipeline = "peneo";  // peneo | serre
  std::string out_dir = "run_out";
  std::string features_path;       // optional external feature file

  int c_e = 64;
  int layers = 2;
  int heads = 2;
  int coord_buckets = 64;
  int c_d = 0;  // 0: half of c_e
  int block_rows = 64;
  int max_tokens = kDefaultMaxTokens;

  float lambda_le = 1, lambda_lgh = 1, lambda_lgt = 1, lambda_elh = 1, lambda_elt = 1;
  float class_weight_negative = 1;
  float class_weight_positive = 10;

  double lr_encoder = 1e-3;
  double lr_decoder = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;
  int epochs = 100;
  int batch_size = 4;
  int eval_every = 2;

  std::uint64_t seed = 1;
  int threads = 1;

  void set(const std::string& key, const std::string& value) {
    auto as_int = [&]() { return std::stoi(value); };
    auto as_float = [&]() { return std::stof(value); };
    auto as_double = [&]() { return std::stod(value); };
    if (key == "preset") {
      apply_preset(value);
    } else if (key == "train") {
      train_path = value;
    } else if (key == "valid") {
      valid_path = value;
    } else if (key == "test") {
      test_path = value;
    } else if (key == "pipeline") {
      if (value != "peneo" && value != "serre") {
        throw ConfigError("config: pipeline must be peneo or serre, got \"" + value + "\"");
      }
      pipeline = value;
    } else if (key == "out_dir") {
      out_dir = value;
    } else if (key == "features") {
      features_path = value;
    } else if (key == "c_e") {
      c_e = as_int();
    } else if (key == "layers") {
      layers = as_int();
    } else if (key == "heads") {
      heads = as_int();
    } else if (key == "coord_buckets") {
      coord_buckets = as_int();
    } else if (key == "c_d") {
      c_d = as_int();
    } else if (key == "block_rows") {
      block_rows = as_int();
    } else if (key == "max_tokens") {
      max_tokens = as_int();
    } else if (key == "lambda_le") {
      lambda_le = as_float();
    } else if (key == "lambda_lgh") {
      lambda_lgh = as_float();
    } else if (key == "lambda_lgt") {
      lambda_lgt = as_float();
    } else if (key == "lambda_elh") {
      lambda_elh = as_float();
    } else if (key == "lambda_elt") {
      lambda_elt = as_float();
    } else if (key == "class_weight_negative") {
      class_weight_negative = as_float();
    } else if (key == "class_weight_positive") {
      class_weight_positive = as_float();
    } else if (key == "lr_encoder") {
      lr_encoder = as_double();
    } else if (key == "lr_decoder") {
      lr_decoder = as_double();
    } else if (key == "beta1") {
      beta1 = as_double();
    } else if (key == "beta2") {
      beta2 = as_double();
    } else if (key == "epsilon") {
      epsilon = as_double();
    } else if (key == "weight_decay") {
      weight_decay = as_double();
    } else if (key == "warmup_ratio") {
      warmup_ratio = as_double();
    } else if (key == "epochs") {
      epochs = as_int();
    } else if (key == "batch_size") {
      batch_size = as_int();
    } else if (key == "eval_every") {
      eval_every = as_int();
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "threads") {
      threads = as_int();
    } else {
      throw ConfigError("config: unknown key \"" + key + "\"");
    }
  }

  // desk: toy-scale settings. paper: the published fine-tuning recipe.
  void apply_preset(const std::string& name) {
    if (name == "desk") {
      lr_encoder = 1e-3;
      lr_decoder = 1e-3;
      epochs = 100;
    } else if (name == "paper") {
      lr_encoder = 2e-6;
      lr_decoder = 1e-4;
      epochs = 650;
      batch_size = 4;
    } else {
      throw ConfigError("config: unknown preset \"" + name + "\"");
    }
  }

  static RunConfig from_file(const std::string& path) {
    RunConfig cfg;
    cfg.update_from_file(path);
    return cfg;
  }

  void update_from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      // trim
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = line.find_last_not_of(" \t\r");
      line = line.substr(b, e - b + 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config: line " + std::to_string(line_no) + " is not key=value");
      }
      auto trim = [](std::string s) {
        const auto b2 = s.find_first_not_of(" \t");
        if (b2 == std::string::npos) return std::string();
        const auto e2 = s.find_last_not_of(" \t");
        return s.substr(b2, e2 - b2 + 1);
      };
      try {
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& ex) {
        throw ConfigError("config: line " + std::to_string(line_no) + ": " + ex.what());
      }
    }
  }

  std::map<std::string, std::string> items() const {
    std::map<std::string, std::string> m;
    auto num = [](double v) {
      std::ostringstream os;
      os << v;
      return os.str();
    };
    m["train"] = train_path;
    m["valid"] = valid_path;
    m["test"] = test_path;
    m["pipeline"] = pipeline;
    m["out_dir"] = out_dir;
    m["features"] = features_path;
    m["c_e"] = std::to_string(c_e);
    m["layers"] = std::to_string(layers);
    m["heads"] = std::to_string(heads);
    m["coord_buckets"] = std::to_string(coord_buckets);
    m["c_d"] = std::to_string(c_d);
    m["block_rows"] = std::to_string(block_rows);
    m["max_tokens"] = std::to_string(max_tokens);
    m["lambda_le"] = num(lambda_le);
    m["lambda_lgh"] = num(lambda_lgh);
    m["lambda_lgt"] = num(lambda_lgt);
    m["lambda_elh"] = num(lambda_elh);
    m["lambda_elt"] = num(lambda_elt);
    m["class_weight_negative"] = num(class_weight_negative);
    m["class_weight_positive"] = num(class_weight_positive);
    m["lr_encoder"] = num(lr_encoder);
    m["lr_decoder"] = num(lr_decoder);
    m["beta1"] = num(beta1);
    m["beta2"] = num(beta2);
    m["epsilon"] = num(epsilon);
    m["weight_decay"] = num(weight_decay);
    m["warmup_ratio"] = num(warmup_ratio);
    m["epochs"] = std::to_string(epochs);
    m["batch_size"] = std::to_string(batch_size);
    m["eval_every"] = std::to_string(eval_every);
    m["seed"] = std::to_string(seed);
    m["threads"] = std::to_string(threads);
    return m;
  }

  // FNV-1a over the canonical sorted key=value form.
  std::string config_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [k, v] : items()) {
      mix(k);
      mix("=");
      mix(v);
      mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  EncoderConfig encoder_config(int vocab_size) const {
    EncoderConfig ec;
    ec.vocab_size = vocab_size;
    ec.c_e = c_e;
    ec.layers = layers;
    ec.heads = heads;
    ec.coord_buckets = coord_buckets;
    return ec;
  }

  DecoderConfig decoder_config() const {
    DecoderConfig dc;
    dc.c_e = c_e;
    dc.c_d = c_d;
    dc.block_rows = block_rows;
    return dc;
  }

  LossConfig loss_config() const {
    LossConfig lc;
    lc.lambdas = {lambda_le, lambda_lgh, lambda_lgt, lambda_elh, lambda_elt};
    lc.class_weight_negative = class_weight_negative;
    lc.class_weight_positive = class_weight_positive;
    return lc;
  }

  OptimizerConfig encoder_optimizer() const {
    OptimizerConfig oc;
    oc.learning_rate = lr_encoder;
    oc.beta1 = beta1;
    oc.beta2 = beta2;
    oc.epsilon = epsilon;
    oc.weight_decay = weight_decay;
    oc.warmup_ratio = warmup_ratio;
    return oc;
  }

  OptimizerConfig decoder_optimizer() const {
    OptimizerConfig oc = encoder_optimizer();
    oc.learning_rate = lr_decoder;
    return oc;
  }

  TrainOptions train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.eval_every = eval_every;
    t.max_tokens = max_tokens;
    t.encoder_opt = encoder_optimizer();
    t.decoder_opt = decoder_optimizer();
    t.seed = seed;
    return t;
  }
};

// Every run writes a manifest so experiments can be re-run exactly. The
// manifest is the one output allowed to carry wall-clock data.
inline Json run_manifest(const std::string& command, const std::vector<std::string>& args,
                         const RunConfig& cfg, double duration_ms) {
  Json j;
  j["tool"] = "peneo";
  j["version"] = "0.1.0";
  j["command"] = command;
  j["args"] = args;
  Json jc;
  for (const auto& [k, v] : cfg.items()) jc[k] = v;
  j["config"] = jc;
  j["config_hash"] = cfg.config_hash();
  j["seed"] = cfg.seed;
  j["duration_ms"] = duration_ms;
  return j;
}

}  // namespace peneo
