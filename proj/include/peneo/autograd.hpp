#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "peneo/tensor.hpp"

namespace peneo {

// Reverse-mode tape node. The graph is rebuilt for every forward pass and
// covers only the layer set this project needs; there is no general autodiff.
template <class T>
struct VarNode {
  TensorT<T> value;
  TensorT<T> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<VarNode<T>>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(VarNode<T>&)> backward_fn;
};

template <class T>
using Var = std::shared_ptr<VarNode<T>>;

inline thread_local bool g_grad_enabled = true;

// Disables graph construction in the current scope (inference paths).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
  ~NoGradGuard() { g_grad_enabled = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class T>
Var<T> constant(TensorT<T> value) {
  auto n = std::make_shared<VarNode<T>>();
  n->value = std::move(value);
  return n;
}

template <class T>
Var<T> leaf(TensorT<T> value, bool requires_grad) {
  auto n = std::make_shared<VarNode<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad = TensorT<T>(n->value.dims());
  return n;
}

// Leaf sharing external value and grad storage (used to bind optimizer
// parameter slots into the graph so backward accumulates in place).
template <class T>
Var<T> leaf_shared(const TensorT<T>& value, const TensorT<T>& grad) {
  auto n = std::make_shared<VarNode<T>>();
  n->value = value;
  n->grad = grad;
  n->requires_grad = true;
  return n;
}

template <class T>
Var<T> make_result(TensorT<T> value, std::vector<Var<T>> parents,
                   std::function<void(VarNode<T>&)> backward_fn) {
  auto n = std::make_shared<VarNode<T>>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    for (const auto& p : parents) {
      if (p && p->requires_grad) {
        n->requires_grad = true;
        break;
      }
    }
  }
  if (n->requires_grad) {
    n->grad = TensorT<T>(n->value.dims());
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

// Runs reverse-mode accumulation from a scalar root. Deterministic: the
// traversal order depends only on graph construction order.
template <class T>
void backward(const Var<T>& root) {
  if (!root->requires_grad) return;
  if (root->value.size() != 1) {
    throw ConfigError("backward: root must be a scalar");
  }

  // Iterative post-order DFS.
  std::vector<VarNode<T>*> order;
  std::unordered_set<VarNode<T>*> seen;
  std::vector<std::pair<VarNode<T>*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      VarNode<T>* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    VarNode<T>* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

}  // namespace peneo
