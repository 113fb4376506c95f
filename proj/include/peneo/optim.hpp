#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "peneo/autograd.hpp"
#include "peneo/tensor.hpp"

namespace peneo {

// One named trainable tensor with its gradient and AdamW moment estimates.
template <class T>
struct ParamSlotT {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;
  TensorT<T> adam_m;
  TensorT<T> adam_v;
  long step_count = 0;

  ParamSlotT(std::string n, TensorT<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.dims()),
        adam_m(value.dims()),
        adam_v(value.dims()) {}

  // Graph leaf aliasing this slot's value and gradient storage.
  Var<T> var() const { return leaf_shared(value, grad); }
};

// Ordered registry of parameter slots. Order is fixed at model construction
// and determines checkpoint record order.
template <class T>
struct ParamStoreT {
  std::vector<std::shared_ptr<ParamSlotT<T>>> slots;

  ParamSlotT<T>& add(std::string name, TensorT<T> init) {
    slots.push_back(std::make_shared<ParamSlotT<T>>(std::move(name), std::move(init)));
    return *slots.back();
  }

  ParamSlotT<T>* find(const std::string& name) {
    for (auto& s : slots) {
      if (s->name == name) return s.get();
    }
    return nullptr;
  }

  void zero_grads() {
    for (auto& s : slots) s->grad.fill(T(0));
  }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s->value.size();
    return n;
  }
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;
  long total_steps = 0;  // 0 disables the schedule (constant learning rate)

  // Linear warmup to the base rate, then linear decay to zero at total_steps.
  // step is 1-based.
  double lr_at(long step) const {
    if (total_steps <= 0) return learning_rate;
    const double warmup = warmup_ratio * static_cast<double>(total_steps);
    double f = 1.0;
    if (warmup > 0.0 && static_cast<double>(step) < warmup) {
      f = static_cast<double>(step) / warmup;
    } else if (total_steps - warmup > 0.0) {
      f = 1.0 - (static_cast<double>(step) - warmup) /
                    (static_cast<double>(total_steps) - warmup);
    }
    return learning_rate * std::max(0.0, std::min(1.0, f));
  }
};

// AdamW with decoupled weight decay and bias correction. Gradients are
// consumed and zeroed.
template <class T>
void adamw_step(ParamStoreT<T>& params, const OptimizerConfig& cfg) {
  for (auto& slot_ptr : params.slots) {
    auto& slot = *slot_ptr;
    slot.step_count += 1;
    const double t = static_cast<double>(slot.step_count);
    const double lr = cfg.lr_at(slot.step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const std::size_t n = slot.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = static_cast<double>(slot.grad[i]);
      const double m = cfg.beta1 * static_cast<double>(slot.adam_m[i]) + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * static_cast<double>(slot.adam_v[i]) + (1.0 - cfg.beta2) * g * g;
      slot.adam_m[i] = static_cast<T>(m);
      slot.adam_v[i] = static_cast<T>(v);
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      const double update = m_hat / (std::sqrt(v_hat) + cfg.epsilon) +
                            cfg.weight_decay * static_cast<double>(slot.value[i]);
      slot.value[i] = static_cast<T>(static_cast<double>(slot.value[i]) - lr * update);
      slot.grad[i] = T(0);
    }
  }
}

}  // namespace peneo
