#pragma once

#include <string>
#include <vector>

#include "peneo/checkpoint.hpp"
#include "peneo/ops.hpp"
#include "peneo/optim.hpp"
#include "peneo/tokenize.hpp"

namespace peneo {

struct EncoderConfig {
  int vocab_size = 0;
  int c_e = 64;          // embedding/output width
  int layers = 2;        // attention block count
  int heads = 2;         // attention head count
  int coord_buckets = 64;

  void validate() const {
    if (vocab_size < 2) throw ConfigError("encoder: vocab_size must be >= 2");
    if (c_e <= 0 || heads <= 0 || c_e % heads != 0) {
      throw ConfigError("encoder: width must be divisible by head count");
    }
    if (layers < 0) throw ConfigError("encoder: negative layer count");
    if (coord_buckets < 2) throw ConfigError("encoder: coord_buckets must be >= 2");
  }
};

// Toy multimodal encoder: word embedding plus bucketized 2-D layout
// embeddings (x/y center, width, height of the token's line box), followed by
// a small residual self-attention stack. There is deliberately no 1-D
// position channel, so token order carries no signal and the whole model is
// permutation-equivariant over tokens.
template <class T>
struct EncoderParamsT {
  EncoderConfig cfg;
  ParamStoreT<T> store;

  ParamSlotT<T>* tok_embed = nullptr;
  ParamSlotT<T>* x_embed = nullptr;
  ParamSlotT<T>* y_embed = nullptr;
  ParamSlotT<T>* w_embed = nullptr;
  ParamSlotT<T>* h_embed = nullptr;

  struct Layer {
    ParamSlotT<T>*q_w, *q_b, *k_w, *k_b, *v_w, *v_b, *o_w, *o_b;
    ParamSlotT<T>*ffn1_w, *ffn1_b, *ffn2_w, *ffn2_b;
  };
  std::vector<Layer> layers;

  EncoderParamsT(const EncoderConfig& config, Rng& rng, const std::string& prefix = "enc/")
      : cfg(config) {
    cfg.validate();
    const int c = cfg.c_e;
    tok_embed = &store.add(prefix + "tok_embed",
                           TensorT<T>::randn({cfg.vocab_size, c}, rng, 0.3));
    // Coordinate tables start from a smooth multi-frequency pattern over the
    // buckets (plus a little noise), so neighboring positions begin with
    // similar vectors and layout jitter generalizes; training refines them.
    auto coord_emb = [&](const char* name) {
      TensorT<T> t = TensorT<T>::randn({cfg.coord_buckets, c}, rng, 0.05);
      for (int b = 0; b < cfg.coord_buckets; ++b) {
        for (int k = 0; k < c; ++k) {
          const double freq =
              6.283185307179586 / std::pow(2.0, 1.0 + (k / 2) % 7);
          const double phase = (k % 2 == 0) ? 0.0 : 1.5707963267948966;
          t.at(b, k) += static_cast<T>(0.3 * std::sin(freq * b + phase));
        }
      }
      return &store.add(prefix + name, std::move(t));
    };
    x_embed = coord_emb("x_embed");
    y_embed = coord_emb("y_embed");
    w_embed = coord_emb("w_embed");
    h_embed = coord_emb("h_embed");
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string lp = prefix + "layer" + std::to_string(l) + "/";
      Layer layer;
      auto mat = [&](const char* name, int rows, int cols, double stddev) {
        return &store.add(lp + name, TensorT<T>::randn({rows, cols}, rng, stddev));
      };
      auto vec = [&](const char* name, int n) {
        return &store.add(lp + name, TensorT<T>({n}));
      };
      layer.q_w = mat("attn_q_w", c, c, 0.15);
      layer.q_b = vec("attn_q_b", c);
      layer.k_w = mat("attn_k_w", c, c, 0.15);
      layer.k_b = vec("attn_k_b", c);
      layer.v_w = mat("attn_v_w", c, c, 0.15);
      layer.v_b = vec("attn_v_b", c);
      layer.o_w = mat("attn_o_w", c, c, 0.05);
      layer.o_b = vec("attn_o_b", c);
      layer.ffn1_w = mat("ffn1_w", 2 * c, c, 0.15);
      layer.ffn1_b = vec("ffn1_b", 2 * c);
      layer.ffn2_w = mat("ffn2_w", c, 2 * c, 0.05);
      layer.ffn2_b = vec("ffn2_b", c);
      layers.push_back(layer);
    }
  }
};

namespace detail {

inline int coord_bucket(float v, int buckets) {
  if (!(v > 0)) v = 0;
  if (v > 1) v = 1;
  int b = static_cast<int>(v * static_cast<float>(buckets));
  return b >= buckets ? buckets - 1 : b;
}

}  // namespace detail

// Per-token feature matrix [N, c_e], fully differentiable through the tape.
template <class T>
Var<T> encode(const TokenizedDoc& doc, const EncoderParamsT<T>& params) {
  const auto& cfg = params.cfg;
  const int n = doc.size();
  if (n == 0) throw DataError("encode: document has no tokens");

  std::vector<int> tok_ids, xb, yb, wb, hb;
  tok_ids.reserve(static_cast<std::size_t>(n));
  for (const auto& t : doc.tokens) {
    if (t.vocab_id < 0 || t.vocab_id >= cfg.vocab_size) {
      throw ConfigError("encode: vocab id out of range");
    }
    tok_ids.push_back(t.vocab_id);
    xb.push_back(detail::coord_bucket(t.bbox.cx() / doc.page_width, cfg.coord_buckets));
    yb.push_back(detail::coord_bucket(t.bbox.cy() / doc.page_height, cfg.coord_buckets));
    wb.push_back(detail::coord_bucket(t.bbox.width() / doc.page_width, cfg.coord_buckets));
    hb.push_back(detail::coord_bucket(t.bbox.height() / doc.page_height, cfg.coord_buckets));
  }

  Var<T> x = add(add(gather_rows(params.tok_embed->var(), tok_ids),
                     gather_rows(params.x_embed->var(), xb)),
                 add(gather_rows(params.y_embed->var(), yb),
                     add(gather_rows(params.w_embed->var(), wb),
                         gather_rows(params.h_embed->var(), hb))));

  for (const auto& layer : params.layers) {
    Var<T> q = linear(x, layer.q_w->var(), layer.q_b->var());
    Var<T> k = linear(x, layer.k_w->var(), layer.k_b->var());
    Var<T> v = linear(x, layer.v_w->var(), layer.v_b->var());
    Var<T> attn = scaled_dot_attention(q, k, v, cfg.heads);
    x = add(x, linear(attn, layer.o_w->var(), layer.o_b->var()));
    Var<T> h = relu(linear(x, layer.ffn1_w->var(), layer.ffn1_b->var()));
    x = add(x, linear(h, layer.ffn2_w->var(), layer.ffn2_b->var()));
  }
  return x;
}

// ---- external feature import/export ------------------------------------
// One tensor per document, named "feat/<doc_id>", in the checkpoint container.

inline std::string feature_record_name(const std::string& doc_id) { return "feat/" + doc_id; }

inline void save_features(const std::string& path,
                          const std::vector<std::pair<std::string, Tensor>>& per_doc) {
  ckpt::NamedTensors tensors;
  for (const auto& [doc_id, feat] : per_doc) {
    tensors.emplace_back(feature_record_name(doc_id), feat);
  }
  ckpt::save(path, tensors);
}

enum class FeatureLoadStatus { ok, missing_document, shape_mismatch };

// Per-document failures leave the run alive; callers skip the document.
inline FeatureLoadStatus load_external_features(const ckpt::NamedTensors& file,
                                                const std::string& doc_id, int n_tokens,
                                                int c_e, Tensor* out) {
  const Tensor* t = ckpt::find(file, feature_record_name(doc_id));
  if (t == nullptr) return FeatureLoadStatus::missing_document;
  if (t->rank() != 2 || t->dim(0) != n_tokens || t->dim(1) != c_e) {
    return FeatureLoadStatus::shape_mismatch;
  }
  *out = *t;
  return FeatureLoadStatus::ok;
}

}  // namespace peneo
