#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "peneo/autograd.hpp"
#include "peneo/tensor.hpp"

namespace peneo {

namespace detail {

// Numerically stable log-sum-exp over one cell of K logits.
template <class T>
T logsumexp(const T* logits, int k_classes) {
  T m = logits[0];
  for (int k = 1; k < k_classes; ++k) m = std::max(m, logits[k]);
  T s = T(0);
  for (int k = 0; k < k_classes; ++k) s += std::exp(logits[k] - m);
  return m + std::log(s);
}

template <class T>
void softmax_cell(const T* logits, int k_classes, T* out) {
  T m = logits[0];
  for (int k = 1; k < k_classes; ++k) m = std::max(m, logits[k]);
  T s = T(0);
  for (int k = 0; k < k_classes; ++k) {
    out[k] = std::exp(logits[k] - m);
    s += out[k];
  }
  for (int k = 0; k < k_classes; ++k) out[k] /= s;
}

// Weighted cross-entropy for one cell. Returns the cell loss and, if
// grad != nullptr, accumulates grad_scale * w[y] * (softmax - onehot(y)).
template <class T>
T weighted_ce_cell(const T* logits, int k_classes, int target, const T* class_weights,
                   T* grad, T grad_scale) {
  T m = logits[0];
  for (int k = 1; k < k_classes; ++k) m = std::max(m, logits[k]);
  T s = T(0);
  for (int k = 0; k < k_classes; ++k) s += std::exp(logits[k] - m);
  const T lse = m + std::log(s);
  const T w = class_weights[target];
  if (grad != nullptr) {
    for (int k = 0; k < k_classes; ++k) {
      T p = std::exp(logits[k] - m) / s;
      grad[k] += grad_scale * w * (p - (k == target ? T(1) : T(0)));
    }
  }
  return w * (lse - logits[target]);
}

}  // namespace detail

// Softmax over the last dimension, plain tensor in / tensor out.
template <class T>
TensorT<T> softmax_lastdim(const TensorT<T>& x) {
  const int k_classes = x.dim(x.rank() - 1);
  TensorT<T> out(x.dims());
  const std::size_t cells = x.size() / static_cast<std::size_t>(k_classes);
  for (std::size_t c = 0; c < cells; ++c) {
    detail::softmax_cell(x.data() + c * k_classes, k_classes, out.data() + c * k_classes);
  }
  return out;
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_dims(b->value)) throw ConfigError("add: dimension mismatch");
  TensorT<T> out(a->value.dims());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
  return make_result<T>(std::move(out), {a, b}, [n](VarNode<T>& node) {
    for (int p = 0; p < 2; ++p) {
      auto& parent = *node.parents[p];
      if (!parent.requires_grad) continue;
      for (std::size_t i = 0; i < n; ++i) parent.grad[i] += node.grad[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_dims(b->value)) throw ConfigError("mul: dimension mismatch");
  TensorT<T> out(a->value.dims());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
  return make_result<T>(std::move(out), {a, b}, [n](VarNode<T>& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    if (pa.requires_grad) {
      for (std::size_t i = 0; i < n; ++i) pa.grad[i] += node.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      for (std::size_t i = 0; i < n; ++i) pb.grad[i] += node.grad[i] * pa.value[i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
  TensorT<T> out(a->value.dims());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i] * s;
  return make_result<T>(std::move(out), {a}, [n, s](VarNode<T>& node) {
    auto& pa = *node.parents[0];
    for (std::size_t i = 0; i < n; ++i) pa.grad[i] += node.grad[i] * s;
  });
}

template <class T>
Var<T> relu(const Var<T>& x) {
  TensorT<T> out(x->value.dims());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = x->value[i] > T(0) ? x->value[i] : T(0);
  return make_result<T>(std::move(out), {x}, [n](VarNode<T>& node) {
    auto& px = *node.parents[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (px.value[i] > T(0)) px.grad[i] += node.grad[i];
    }
  });
}

template <class T>
Var<T> reduce_sum(const Var<T>& x) {
  TensorT<T> out({1});
  const std::size_t n = x->value.size();
  for (std::size_t i = 0; i < n; ++i) out[0] += x->value[i];
  return make_result<T>(std::move(out), {x}, [n](VarNode<T>& node) {
    auto& px = *node.parents[0];
    for (std::size_t i = 0; i < n; ++i) px.grad[i] += node.grad[0];
  });
}

// out[..., k] = b[k] + sum_j w[k, j] * x[..., j]
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& xt = x->value;
  const auto& wt = w->value;
  const auto& bt = b->value;
  if (wt.rank() != 2 || bt.rank() != 1 || bt.dim(0) != wt.dim(0)) {
    throw ConfigError("linear: bad weight/bias dims");
  }
  const int c_out = wt.dim(0);
  const int c_in = wt.dim(1);
  if (xt.rank() < 1 || xt.dim(xt.rank() - 1) != c_in) {
    throw ConfigError("linear: input width " + xt.dims_str() + " does not match weight " +
                      wt.dims_str());
  }
  const std::size_t rows = xt.size() / static_cast<std::size_t>(c_in);

  std::vector<int> out_dims = xt.dims();
  out_dims.back() = c_out;
  TensorT<T> out(out_dims);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xt.data() + r * c_in;
    T* or_ = out.data() + r * c_out;
    for (int k = 0; k < c_out; ++k) {
      T acc = bt[static_cast<std::size_t>(k)];
      const T* wk = wt.data() + static_cast<std::size_t>(k) * c_in;
      for (int j = 0; j < c_in; ++j) acc += wk[j] * xr[j];
      or_[k] = acc;
    }
  }

  return make_result<T>(std::move(out), {x, w, b}, [rows, c_in, c_out](VarNode<T>& node) {
    auto& px = *node.parents[0];
    auto& pw = *node.parents[1];
    auto& pb = *node.parents[2];
    for (std::size_t r = 0; r < rows; ++r) {
      const T* gr = node.grad.data() + r * c_out;
      const T* xr = px.value.data() + r * c_in;
      if (px.requires_grad) {
        T* gx = px.grad.data() + r * c_in;
        for (int k = 0; k < c_out; ++k) {
          const T g = gr[k];
          const T* wk = pw.value.data() + static_cast<std::size_t>(k) * c_in;
          for (int j = 0; j < c_in; ++j) gx[j] += g * wk[j];
        }
      }
      if (pw.requires_grad) {
        for (int k = 0; k < c_out; ++k) {
          const T g = gr[k];
          T* gwk = pw.grad.data() + static_cast<std::size_t>(k) * c_in;
          for (int j = 0; j < c_in; ++j) gwk[j] += g * xr[j];
        }
      }
      if (pb.requires_grad) {
        for (int k = 0; k < c_out; ++k) pb.grad[static_cast<std::size_t>(k)] += gr[k];
      }
    }
  });
}

// Row gather: out[r, :] = table[rows[r], :]. Serves both embedding lookup
// (table = parameter) and feature gathering (table = activations).
template <class T>
Var<T> gather_rows(const Var<T>& table, std::vector<int> rows) {
  const auto& tt = table->value;
  if (tt.rank() != 2) throw ConfigError("gather_rows: table must be 2-D");
  const int width = tt.dim(1);
  for (int r : rows) {
    if (r < 0 || r >= tt.dim(0)) throw ConfigError("gather_rows: row index out of range");
  }
  TensorT<T> out({static_cast<int>(rows.size()), width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const T* src = tt.data() + static_cast<std::size_t>(rows[i]) * width;
    std::copy(src, src + width, out.data() + i * width);
  }
  return make_result<T>(std::move(out), {table},
                        [rows = std::move(rows), width](VarNode<T>& node) {
                          auto& pt = *node.parents[0];
                          for (std::size_t i = 0; i < rows.size(); ++i) {
                            const T* g = node.grad.data() + i * width;
                            T* dst = pt.grad.data() + static_cast<std::size_t>(rows[i]) * width;
                            for (int j = 0; j < width; ++j) dst[j] += g[j];
                          }
                        });
}

// Concatenate two 2-D tensors along the last dimension.
template <class T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b) {
  const auto& at = a->value;
  const auto& bt = b->value;
  if (at.rank() != 2 || bt.rank() != 2 || at.dim(0) != bt.dim(0)) {
    throw ConfigError("concat_cols: incompatible dims");
  }
  const int n = at.dim(0);
  const int ca = at.dim(1);
  const int cb = bt.dim(1);
  TensorT<T> out({n, ca + cb});
  for (int r = 0; r < n; ++r) {
    std::copy(at.data() + static_cast<std::size_t>(r) * ca,
              at.data() + static_cast<std::size_t>(r + 1) * ca,
              out.data() + static_cast<std::size_t>(r) * (ca + cb));
    std::copy(bt.data() + static_cast<std::size_t>(r) * cb,
              bt.data() + static_cast<std::size_t>(r + 1) * cb,
              out.data() + static_cast<std::size_t>(r) * (ca + cb) + ca);
  }
  return make_result<T>(std::move(out), {a, b}, [n, ca, cb](VarNode<T>& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    for (int r = 0; r < n; ++r) {
      const T* g = node.grad.data() + static_cast<std::size_t>(r) * (ca + cb);
      if (pa.requires_grad) {
        T* ga = pa.grad.data() + static_cast<std::size_t>(r) * ca;
        for (int j = 0; j < ca; ++j) ga[j] += g[j];
      }
      if (pb.requires_grad) {
        T* gb = pb.grad.data() + static_cast<std::size_t>(r) * cb;
        for (int j = 0; j < cb; ++j) gb[j] += g[ca + j];
      }
    }
  });
}

// Multi-head scaled dot-product self-attention over already-projected
// q/k/v of shape [N, c]. Head h attends within its own c/n_heads slice.
template <class T>
Var<T> scaled_dot_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, int n_heads) {
  const auto& qt = q->value;
  if (qt.rank() != 2 || !qt.same_dims(k->value) || !qt.same_dims(v->value)) {
    throw ConfigError("attention: q/k/v dims must match and be 2-D");
  }
  const int n = qt.dim(0);
  const int c = qt.dim(1);
  if (n_heads <= 0 || c % n_heads != 0) throw ConfigError("attention: heads must divide width");
  const int hd = c / n_heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hd));

  TensorT<T> probs({n_heads, n, n});
  TensorT<T> out({n, c});
  std::vector<T> row(static_cast<std::size_t>(n));
  for (int h = 0; h < n_heads; ++h) {
    const int off = h * hd;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        T s = T(0);
        const T* qi = qt.data() + static_cast<std::size_t>(i) * c + off;
        const T* kj = k->value.data() + static_cast<std::size_t>(j) * c + off;
        for (int d = 0; d < hd; ++d) s += qi[d] * kj[d];
        row[static_cast<std::size_t>(j)] = s * inv_sqrt;
      }
      detail::softmax_cell(row.data(), n, &probs.at(h, i, 0));
      T* oi = out.data() + static_cast<std::size_t>(i) * c + off;
      for (int j = 0; j < n; ++j) {
        const T a = probs.at(h, i, j);
        const T* vj = v->value.data() + static_cast<std::size_t>(j) * c + off;
        for (int d = 0; d < hd; ++d) oi[d] += a * vj[d];
      }
    }
  }

  return make_result<T>(
      std::move(out), {q, k, v}, [n, c, hd, n_heads, inv_sqrt, probs](VarNode<T>& node) {
        auto& pq = *node.parents[0];
        auto& pk = *node.parents[1];
        auto& pv = *node.parents[2];
        std::vector<T> d_attn(static_cast<std::size_t>(n));
        for (int h = 0; h < n_heads; ++h) {
          const int off = h * hd;
          for (int i = 0; i < n; ++i) {
            const T* gi = node.grad.data() + static_cast<std::size_t>(i) * c + off;
            // d(attention weights) and dv
            T dot = T(0);
            for (int j = 0; j < n; ++j) {
              const T* vj = pv.value.data() + static_cast<std::size_t>(j) * c + off;
              T da = T(0);
              for (int d = 0; d < hd; ++d) da += gi[d] * vj[d];
              d_attn[static_cast<std::size_t>(j)] = da;
              dot += da * probs.at(h, i, j);
              if (pv.requires_grad) {
                T* gv = pv.grad.data() + static_cast<std::size_t>(j) * c + off;
                const T a = probs.at(h, i, j);
                for (int d = 0; d < hd; ++d) gv[d] += a * gi[d];
              }
            }
            // softmax backward, then dq/dk
            for (int j = 0; j < n; ++j) {
              const T ds = probs.at(h, i, j) * (d_attn[static_cast<std::size_t>(j)] - dot) * inv_sqrt;
              const T* kj = pk.value.data() + static_cast<std::size_t>(j) * c + off;
              const T* qi = pq.value.data() + static_cast<std::size_t>(i) * c + off;
              if (pq.requires_grad) {
                T* gq = pq.grad.data() + static_cast<std::size_t>(i) * c + off;
                for (int d = 0; d < hd; ++d) gq[d] += ds * kj[d];
              }
              if (pk.requires_grad) {
                T* gk = pk.grad.data() + static_cast<std::size_t>(j) * c + off;
                for (int d = 0; d < hd; ++d) gk[d] += ds * qi[d];
              }
            }
          }
        }
      });
}

// Class-weighted softmax cross-entropy, averaged over all cells. logits has
// shape [..., K]; targets holds one class index per cell in row-major order.
template <class T>
Var<T> softmax_ce_weighted(const Var<T>& logits, std::vector<int> targets,
                           const TensorT<T>& class_weights) {
  const auto& lt = logits->value;
  const int k_classes = lt.dim(lt.rank() - 1);
  const std::size_t cells = lt.size() / static_cast<std::size_t>(k_classes);
  if (targets.size() != cells) throw ConfigError("softmax_ce: target count mismatch");
  if (class_weights.rank() != 1 || class_weights.dim(0) != k_classes) {
    throw ConfigError("softmax_ce: class weight count mismatch");
  }
  for (int t : targets) {
    if (t < 0 || t >= k_classes) throw ConfigError("softmax_ce: target out of range");
  }
  for (std::size_t k = 0; k < class_weights.size(); ++k) {
    if (!(class_weights[k] > T(0))) throw ConfigError("softmax_ce: class weights must be positive");
  }

  TensorT<T> out({1});
  T acc = T(0);
  for (std::size_t cl = 0; cl < cells; ++cl) {
    acc += detail::weighted_ce_cell<T>(lt.data() + cl * k_classes, k_classes, targets[cl],
                                       class_weights.data(), nullptr, T(0));
  }
  out[0] = acc / static_cast<T>(cells);

  return make_result<T>(std::move(out), {logits},
                        [targets = std::move(targets), class_weights, k_classes,
                         cells](VarNode<T>& node) {
                          auto& pl = *node.parents[0];
                          const T gscale = node.grad[0] / static_cast<T>(cells);
                          for (std::size_t cl = 0; cl < cells; ++cl) {
                            detail::weighted_ce_cell<T>(
                                pl.value.data() + cl * k_classes, k_classes, targets[cl],
                                class_weights.data(), pl.grad.data() + cl * k_classes, gscale);
                          }
                        });
}

}  // namespace peneo
