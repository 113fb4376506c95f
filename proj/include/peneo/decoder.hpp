#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "peneo/encoder.hpp"
#include "peneo/ops.hpp"
#include "peneo/optim.hpp"
#include "peneo/tokenize.hpp"

namespace peneo {

// The five token-relation heads. Order is fixed and shared by every stacked
// tensor, checkpoint name, and report in the project.
enum RelationHead : int {
  kLineExtract = 0,   // (first, last) token of a key/value line
  kGroupHead = 1,     // head token of line -> head token of next line in entity
  kGroupTail = 2,     // tail token of line -> tail token of next line in entity
  kLinkHead = 3,      // key first-line head -> value first-line head
  kLinkTail = 4,      // key last-line tail -> value last-line tail
};
constexpr int kNumHeads = 5;
constexpr const char* kHeadKeys[kNumHeads] = {"le", "lgh", "lgt", "elh", "elt"};

struct DecoderConfig {
  int c_e = 64;
  int c_d = 0;         // 0 means c_e / 2
  int block_rows = 64; // row block size for the pair tensor

  int channels() const { return c_d > 0 ? c_d : c_e / 2; }

  void validate() const {
    if (c_e <= 0 || channels() <= 0) throw ConfigError("decoder: bad channel sizes");
    if (block_rows <= 0) throw ConfigError("decoder: block_rows must be positive");
  }
};

template <class T>
struct DecoderParamsT {
  DecoderConfig cfg;
  ParamStoreT<T> store;

  ParamSlotT<T>* proj_w = nullptr;  // [c_d, c_e]
  ParamSlotT<T>* proj_b = nullptr;  // [c_d]
  ParamSlotT<T>* pair_w = nullptr;  // [c_d, 2*c_d]
  ParamSlotT<T>* pair_b = nullptr;  // [c_d]

  struct HeadMlp {
    ParamSlotT<T>* w1;  // [c_d, c_d]
    ParamSlotT<T>* b1;  // [c_d]
    ParamSlotT<T>* w2;  // [2, c_d]
    ParamSlotT<T>* b2;  // [2]
  };
  std::array<HeadMlp, kNumHeads> heads;

  DecoderParamsT(const DecoderConfig& config, Rng& rng, const std::string& prefix = "dec/")
      : cfg(config) {
    cfg.validate();
    const int cd = cfg.channels();
    proj_w = &store.add(prefix + "W_proj", TensorT<T>::randn({cd, cfg.c_e}, rng, 0.15));
    proj_b = &store.add(prefix + "b_proj", TensorT<T>({cd}));
    pair_w = &store.add(prefix + "W_pair", TensorT<T>::randn({cd, 2 * cd}, rng, 0.15));
    pair_b = &store.add(prefix + "b_pair", TensorT<T>({cd}));
    for (int h = 0; h < kNumHeads; ++h) {
      const std::string hp = prefix + "head_" + kHeadKeys[h] + "/";
      heads[static_cast<std::size_t>(h)] = HeadMlp{
          &store.add(hp + "W1", TensorT<T>::randn({cd, cd}, rng, 0.2)),
          &store.add(hp + "b1", TensorT<T>({cd})),
          &store.add(hp + "W2", TensorT<T>::randn({2, cd}, rng, 0.2)),
          &store.add(hp + "b2", TensorT<T>({2}))};
    }
  }
};

namespace detail {

// One cell of the pair tensor, in the canonical concatenation order:
// out[d] = b[d] + sum_k w[d,k] h_i[k] + sum_k w[d,c_d+k] h_j[k].
template <class T>
inline void pair_cell(const T* h_i, const T* h_j, const T* w, const T* b, int cd, T* out) {
  for (int d = 0; d < cd; ++d) {
    const T* wd = w + static_cast<std::size_t>(d) * (2 * cd);
    T acc = b[d];
    for (int k = 0; k < cd; ++k) acc += wd[k] * h_i[k];
    for (int k = 0; k < cd; ++k) acc += wd[cd + k] * h_j[k];
    out[d] = acc;
  }
}

// Two-layer relation head MLP for one cell: logits = W2 relu(W1 m + b1) + b2.
template <class T>
inline void head_cell(const T* m, const T* w1, const T* b1, const T* w2, const T* b2, int cd,
                      T* hidden, T* logits) {
  for (int q = 0; q < cd; ++q) {
    const T* w1q = w1 + static_cast<std::size_t>(q) * cd;
    T acc = b1[q];
    for (int d = 0; d < cd; ++d) acc += w1q[d] * m[d];
    hidden[q] = acc > T(0) ? acc : T(0);
  }
  for (int c = 0; c < 2; ++c) {
    const T* w2c = w2 + static_cast<std::size_t>(c) * cd;
    T acc = b2[c];
    for (int q = 0; q < cd; ++q) acc += w2c[q] * hidden[q];
    logits[c] = acc;
  }
}

}  // namespace detail

// Eq-style channel projection: one row per token, [N, c_e] -> [N, c_d].
template <class T>
TensorT<T> project(const TensorT<T>& features, const DecoderParamsT<T>& params) {
  const int cd = params.cfg.channels();
  const int ce = params.cfg.c_e;
  if (features.rank() != 2 || features.dim(1) != ce) {
    throw ConfigError("project: feature width mismatch");
  }
  const int n = features.dim(0);
  TensorT<T> out({n, cd});
  for (int i = 0; i < n; ++i) {
    const T* f = features.data() + static_cast<std::size_t>(i) * ce;
    T* o = out.data() + static_cast<std::size_t>(i) * cd;
    for (int d = 0; d < cd; ++d) {
      const T* wd = params.proj_w->value.data() + static_cast<std::size_t>(d) * ce;
      T acc = params.proj_b->value[static_cast<std::size_t>(d)];
      for (int k = 0; k < ce; ++k) acc += wd[k] * f[k];
      o[d] = acc;
    }
  }
  return out;
}

// Token pair tensor M[i,j,:] = W_pair (h_i ++ h_j) + b_pair, computed in row
// blocks. Blocking only orders the work; every cell matches the plain
// definition bit for bit.
template <class T>
TensorT<T> pair_encode(const TensorT<T>& h, const DecoderParamsT<T>& params) {
  const int cd = params.cfg.channels();
  if (h.rank() != 2 || h.dim(1) != cd) throw ConfigError("pair_encode: width mismatch");
  const int n = h.dim(0);
  TensorT<T> out({n, n, cd});
  const int block = params.cfg.block_rows;
  for (int i0 = 0; i0 < n; i0 += block) {
    const int i1 = std::min(n, i0 + block);
    for (int i = i0; i < i1; ++i) {
      const T* hi = h.data() + static_cast<std::size_t>(i) * cd;
      for (int j = 0; j < n; ++j) {
        const T* hj = h.data() + static_cast<std::size_t>(j) * cd;
        detail::pair_cell(hi, hj, params.pair_w->value.data(), params.pair_b->value.data(), cd,
                          out.data() + (static_cast<std::size_t>(i) * n + j) * cd);
      }
    }
  }
  return out;
}

// Post-softmax scores of one head applied to an explicit pair tensor.
template <class T>
TensorT<T> head_scores(const TensorT<T>& pair_tensor, const DecoderParamsT<T>& params,
                       int head) {
  if (head < 0 || head >= kNumHeads) throw ConfigError("head_scores: bad head");
  const int cd = params.cfg.channels();
  if (pair_tensor.rank() != 3 || pair_tensor.dim(2) != cd) {
    throw ConfigError("head_scores: pair tensor width mismatch");
  }
  const auto& mlp = params.heads[static_cast<std::size_t>(head)];
  const int n = pair_tensor.dim(0);
  TensorT<T> out({n, n, 2});
  std::vector<T> hidden(static_cast<std::size_t>(cd));
  T logits[2];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      detail::head_cell(pair_tensor.data() + (static_cast<std::size_t>(i) * n + j) * cd,
                        mlp.w1->value.data(), mlp.b1->value.data(), mlp.w2->value.data(),
                        mlp.b2->value.data(), cd, hidden.data(), logits);
      detail::softmax_cell(logits, 2, out.data() + (static_cast<std::size_t>(i) * n + j) * 2);
    }
  }
  return out;
}

// ---- stacked relation tensors -------------------------------------------

// Pre-softmax logits of all five heads, stacked [5, N, N, 2].
template <class T>
TensorT<T> decoder_logits(const TensorT<T>& h, const DecoderParamsT<T>& params) {
  const int cd = params.cfg.channels();
  if (h.rank() != 2 || h.dim(1) != cd) throw ConfigError("decoder_logits: width mismatch");
  const int n = h.dim(0);
  TensorT<T> out({kNumHeads, n, n, 2});
  const std::size_t plane = static_cast<std::size_t>(n) * n * 2;
  std::vector<T> m(static_cast<std::size_t>(cd));
  std::vector<T> hidden(static_cast<std::size_t>(cd));
  const int block = params.cfg.block_rows;
  for (int i0 = 0; i0 < n; i0 += block) {
    const int i1 = std::min(n, i0 + block);
    for (int i = i0; i < i1; ++i) {
      const T* hi = h.data() + static_cast<std::size_t>(i) * cd;
      for (int j = 0; j < n; ++j) {
        const T* hj = h.data() + static_cast<std::size_t>(j) * cd;
        detail::pair_cell(hi, hj, params.pair_w->value.data(), params.pair_b->value.data(), cd,
                          m.data());
        for (int hh = 0; hh < kNumHeads; ++hh) {
          const auto& mlp = params.heads[static_cast<std::size_t>(hh)];
          detail::head_cell(m.data(), mlp.w1->value.data(), mlp.b1->value.data(),
                            mlp.w2->value.data(), mlp.b2->value.data(), cd, hidden.data(),
                            out.data() + static_cast<std::size_t>(hh) * plane +
                                (static_cast<std::size_t>(i) * n + j) * 2);
        }
      }
    }
  }
  return out;
}

// Fused tape op: projection output h -> stacked logits [5, N, N, 2]. The
// forward never materializes the full pair tensor; backward recomputes each
// row block (pair cells and head activations) instead of storing them.
template <class T>
Var<T> decoder_logits_var(const Var<T>& h, DecoderParamsT<T>& params) {
  TensorT<T> out = decoder_logits(h->value, params);
  const int n = h->value.dim(0);
  const int cd = params.cfg.channels();
  const int block = params.cfg.block_rows;

  std::vector<Var<T>> parents;
  parents.push_back(h);
  parents.push_back(params.pair_w->var());
  parents.push_back(params.pair_b->var());
  for (auto& mlp : params.heads) {
    parents.push_back(mlp.w1->var());
    parents.push_back(mlp.b1->var());
    parents.push_back(mlp.w2->var());
    parents.push_back(mlp.b2->var());
  }

  return make_result<T>(std::move(out), std::move(parents), [n, cd, block](VarNode<T>& node) {
    auto& ph = *node.parents[0];
    auto& pw = *node.parents[1];
    auto& pb = *node.parents[2];
    const std::size_t plane = static_cast<std::size_t>(n) * n * 2;
    const T* h_data = ph.value.data();
    const T* w_data = pw.value.data();
    const T* b_data = pb.value.data();

    const int rows = std::min(block, n);
    std::vector<T> m_block(static_cast<std::size_t>(rows) * n * cd);
    std::vector<T> dm_block(static_cast<std::size_t>(rows) * n * cd);
    std::vector<T> hidden(static_cast<std::size_t>(cd));
    std::vector<T> dhidden(static_cast<std::size_t>(cd));

    for (int i0 = 0; i0 < n; i0 += block) {
      const int i1 = std::min(n, i0 + block);
      // Recompute the pair cells of this row block.
      for (int i = i0; i < i1; ++i) {
        const T* hi = h_data + static_cast<std::size_t>(i) * cd;
        for (int j = 0; j < n; ++j) {
          detail::pair_cell(hi, h_data + static_cast<std::size_t>(j) * cd, w_data, b_data, cd,
                            m_block.data() + (static_cast<std::size_t>(i - i0) * n + j) * cd);
        }
      }
      std::fill(dm_block.begin(), dm_block.end(), T(0));

      for (int hh = 0; hh < kNumHeads; ++hh) {
        auto& pw1 = *node.parents[3 + 4 * hh + 0];
        auto& pb1 = *node.parents[3 + 4 * hh + 1];
        auto& pw2 = *node.parents[3 + 4 * hh + 2];
        auto& pb2 = *node.parents[3 + 4 * hh + 3];
        for (int i = i0; i < i1; ++i) {
          for (int j = 0; j < n; ++j) {
            const T* m = m_block.data() + (static_cast<std::size_t>(i - i0) * n + j) * cd;
            const T* glogits = node.grad.data() + static_cast<std::size_t>(hh) * plane +
                               (static_cast<std::size_t>(i) * n + j) * 2;
            if (glogits[0] == T(0) && glogits[1] == T(0)) continue;
            // Recompute hidden activations for this cell.
            for (int q = 0; q < cd; ++q) {
              const T* w1q = pw1.value.data() + static_cast<std::size_t>(q) * cd;
              T acc = pb1.value[static_cast<std::size_t>(q)];
              for (int d = 0; d < cd; ++d) acc += w1q[d] * m[d];
              hidden[static_cast<std::size_t>(q)] = acc > T(0) ? acc : T(0);
            }
            for (int q = 0; q < cd; ++q) dhidden[static_cast<std::size_t>(q)] = T(0);
            for (int c = 0; c < 2; ++c) {
              const T g = glogits[c];
              if (g == T(0)) continue;
              const T* w2c = pw2.value.data() + static_cast<std::size_t>(c) * cd;
              T* gw2c = pw2.grad.data() + static_cast<std::size_t>(c) * cd;
              for (int q = 0; q < cd; ++q) {
                gw2c[q] += g * hidden[static_cast<std::size_t>(q)];
                dhidden[static_cast<std::size_t>(q)] += g * w2c[q];
              }
              pb2.grad[static_cast<std::size_t>(c)] += g;
            }
            T* dm = dm_block.data() + (static_cast<std::size_t>(i - i0) * n + j) * cd;
            for (int q = 0; q < cd; ++q) {
              if (!(hidden[static_cast<std::size_t>(q)] > T(0))) continue;
              const T gq = dhidden[static_cast<std::size_t>(q)];
              if (gq == T(0)) continue;
              const T* w1q = pw1.value.data() + static_cast<std::size_t>(q) * cd;
              T* gw1q = pw1.grad.data() + static_cast<std::size_t>(q) * cd;
              for (int d = 0; d < cd; ++d) {
                gw1q[d] += gq * m[d];
                dm[d] += gq * w1q[d];
              }
              pb1.grad[static_cast<std::size_t>(q)] += gq;
            }
          }
        }
      }

      // Pair-encoding backward for this block.
      for (int i = i0; i < i1; ++i) {
        const T* hi = h_data + static_cast<std::size_t>(i) * cd;
        for (int j = 0; j < n; ++j) {
          const T* hj = h_data + static_cast<std::size_t>(j) * cd;
          const T* dm = dm_block.data() + (static_cast<std::size_t>(i - i0) * n + j) * cd;
          for (int d = 0; d < cd; ++d) {
            const T g = dm[d];
            if (g == T(0)) continue;
            if (pb.requires_grad) pb.grad[static_cast<std::size_t>(d)] += g;
            const T* wd = w_data + static_cast<std::size_t>(d) * (2 * cd);
            if (pw.requires_grad) {
              T* gwd = pw.grad.data() + static_cast<std::size_t>(d) * (2 * cd);
              for (int k = 0; k < cd; ++k) {
                gwd[k] += g * hi[k];
                gwd[cd + k] += g * hj[k];
              }
            }
            if (ph.requires_grad) {
              T* ghi = ph.grad.data() + static_cast<std::size_t>(i) * cd;
              T* ghj = ph.grad.data() + static_cast<std::size_t>(j) * cd;
              for (int k = 0; k < cd; ++k) {
                ghi[k] += g * wd[k];
                ghj[k] += g * wd[cd + k];
              }
            }
          }
        }
      }
    }
  });
}

// ---- relation matrices, targets, loss ------------------------------------

// Post-softmax probabilities of all heads, stacked [5, N, N, 2].
struct RelationScores {
  int n = 0;
  Tensor probs;

  float positive(int head, int i, int j) const { return probs.at(head, i, j, 1); }
};

// Binary decisions per head.
struct RelationMatrices {
  int n = 0;
  std::vector<std::uint8_t> cells;  // [5, N, N]

  std::uint8_t at(int head, int i, int j) const {
    return cells[(static_cast<std::size_t>(head) * n + i) * n + j];
  }
  void set(int head, int i, int j, std::uint8_t v) {
    cells[(static_cast<std::size_t>(head) * n + i) * n + j] = v;
  }
  static RelationMatrices zeros(int n) {
    RelationMatrices m;
    m.n = n;
    m.cells.assign(static_cast<std::size_t>(kNumHeads) * n * n, 0);
    return m;
  }
};

using RelationTargets = RelationMatrices;

template <class T>
RelationScores relation_scores(const TensorT<T>& stacked_logits) {
  RelationScores s;
  s.n = stacked_logits.dim(1);
  s.probs = softmax_lastdim(stacked_logits).template cast<float>();
  return s;
}

// Per-cell argmax; an exact tie goes to the negative class.
inline RelationMatrices decode(const RelationScores& scores) {
  RelationMatrices m = RelationMatrices::zeros(scores.n);
  for (int h = 0; h < kNumHeads; ++h) {
    for (int i = 0; i < scores.n; ++i) {
      for (int j = 0; j < scores.n; ++j) {
        m.set(h, i, j,
              scores.probs.at(h, i, j, 1) > scores.probs.at(h, i, j, 0) ? 1 : 0);
      }
    }
  }
  return m;
}

// Gold matrices rendered as certain scores (positives get probability 1).
inline RelationScores scores_from_matrices(const RelationMatrices& m) {
  RelationScores s;
  s.n = m.n;
  s.probs = Tensor({kNumHeads, m.n, m.n, 2});
  for (int h = 0; h < kNumHeads; ++h) {
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) {
        const bool on = m.at(h, i, j) != 0;
        s.probs.at(h, i, j, 0) = on ? 0.0f : 1.0f;
        s.probs.at(h, i, j, 1) = on ? 1.0f : 0.0f;
      }
    }
  }
  return s;
}

// Builds the five gold matrices from line/entity/link annotations. Lines cut
// away by tokenizer truncation drop the affected grouping cells and links,
// with one warning per dropped link.
inline RelationTargets build_targets(const TokenizedDoc& doc,
                                     const std::vector<EntityAnn>& entities,
                                     const std::vector<PairLinkAnn>& links,
                                     std::vector<std::string>* warnings = nullptr) {
  const int n = doc.size();
  RelationTargets y = RelationMatrices::zeros(n);

  auto span_of = [&](int line_id) -> const LineSpan* {
    auto it = doc.line_spans.find(line_id);
    return it == doc.line_spans.end() ? nullptr : &it->second;
  };

  for (const auto& e : entities) {
    if (e.category != EntityCategory::question && e.category != EntityCategory::answer) continue;
    const LineSpan* prev = nullptr;
    for (int lid : e.line_ids) {
      const LineSpan* span = span_of(lid);
      if (span == nullptr) {
        prev = nullptr;
        continue;
      }
      y.set(kLineExtract, span->first, span->last, 1);
      if (prev != nullptr) {
        y.set(kGroupHead, prev->first, span->first, 1);
        y.set(kGroupTail, prev->last, span->last, 1);
      }
      prev = span;
    }
  }

  auto find_entity = [&](int id) -> const EntityAnn* {
    for (const auto& e : entities) {
      if (e.id == id) return &e;
    }
    return nullptr;
  };

  for (const auto& link : links) {
    const EntityAnn* key = find_entity(link.key_entity_id);
    const EntityAnn* value = find_entity(link.value_entity_id);
    if (key == nullptr || value == nullptr || key->line_ids.empty() || value->line_ids.empty()) {
      continue;
    }
    const LineSpan* key_first = span_of(key->line_ids.front());
    const LineSpan* key_last = span_of(key->line_ids.back());
    const LineSpan* value_first = span_of(value->line_ids.front());
    const LineSpan* value_last = span_of(value->line_ids.back());
    if (key_first == nullptr || key_last == nullptr || value_first == nullptr ||
        value_last == nullptr) {
      if (warnings != nullptr) {
        warnings->push_back("doc " + doc.doc_id + ": link (" +
                            std::to_string(link.key_entity_id) + "," +
                            std::to_string(link.value_entity_id) +
                            ") references truncated lines, dropped");
      }
      continue;
    }
    y.set(kLinkHead, key_first->first, value_first->first, 1);
    y.set(kLinkTail, key_last->last, value_last->last, 1);
  }
  return y;
}

struct LossConfig {
  std::array<float, kNumHeads> lambdas = {1, 1, 1, 1, 1};
  float class_weight_negative = 1;
  float class_weight_positive = 10;

  void validate() const {
    bool any = false;
    for (float l : lambdas) {
      if (l < 0) throw ConfigError("loss: negative lambda");
      if (l > 0) any = true;
    }
    if (!any) throw ConfigError("loss: at least one lambda must be positive");
    if (!(class_weight_negative > 0) || !(class_weight_positive > 0)) {
      throw ConfigError("loss: class weights must be positive");
    }
  }
};

// Joint weighted cross-entropy over the five stacked heads; each head's term
// is the mean over its N*N cells, scaled by its lambda. Returns the loss and
// the gradient with respect to the stacked logits.
template <class T>
std::pair<T, TensorT<T>> loss_and_grads(const TensorT<T>& stacked_logits,
                                        const RelationTargets& targets, const LossConfig& cfg) {
  cfg.validate();
  const int n = stacked_logits.dim(1);
  if (targets.n != n) throw ConfigError("loss: target size mismatch");
  TensorT<T> grad(stacked_logits.dims());
  const T weights[2] = {static_cast<T>(cfg.class_weight_negative),
                        static_cast<T>(cfg.class_weight_positive)};
  const std::size_t plane = static_cast<std::size_t>(n) * n * 2;
  T total = T(0);
  for (int h = 0; h < kNumHeads; ++h) {
    const T lambda = static_cast<T>(cfg.lambdas[static_cast<std::size_t>(h)]);
    if (lambda == T(0)) continue;
    const T cell_scale = lambda / static_cast<T>(static_cast<std::size_t>(n) * n);
    T head_sum = T(0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t off = static_cast<std::size_t>(h) * plane +
                                (static_cast<std::size_t>(i) * n + j) * 2;
        head_sum += detail::weighted_ce_cell<T>(stacked_logits.data() + off, 2,
                                                targets.at(h, i, j), weights,
                                                grad.data() + off, cell_scale);
      }
    }
    total += lambda * (head_sum / static_cast<T>(static_cast<std::size_t>(n) * n));
  }
  return {total, std::move(grad)};
}

// Tape wrapper around loss_and_grads.
template <class T>
Var<T> peneo_loss(const Var<T>& stacked_logits, const RelationTargets& targets,
                  const LossConfig& cfg) {
  auto loss_grad = loss_and_grads(stacked_logits->value, targets, cfg);
  TensorT<T> grad = std::move(loss_grad.second);
  TensorT<T> out({1});
  out[0] = loss_grad.first;
  return make_result<T>(std::move(out), {stacked_logits},
                        [grad = std::move(grad)](VarNode<T>& node) {
                          auto& pl = *node.parents[0];
                          const T g = node.grad[0];
                          for (std::size_t i = 0; i < grad.size(); ++i) pl.grad[i] += g * grad[i];
                        });
}

// Inference: external or toy-encoder features -> relation scores.
template <class T>
RelationScores decoder_infer(const TensorT<T>& features, const DecoderParamsT<T>& params) {
  TensorT<T> h = project(features, params);
  return relation_scores(decoder_logits(h, params));
}

}  // namespace peneo
