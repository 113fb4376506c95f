#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "peneo/rng.hpp"

namespace peneo {

// Fatal misconfiguration (bad dimensions, bad hyperparameters).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problems with input data or artifact files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric failures (non-finite values, failed gradient checks).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor of real values. Storage is shared between copies;
// tensors are treated as immutable once a forward/backward pass has produced
// them, so sharing is safe across readers. T is float in production code and
// double inside the finite-difference checker.
template <class T>
class TensorT {
 public:
  TensorT() : data_(std::make_shared<std::vector<T>>()) {}

  explicit TensorT(std::vector<int> dims)
      : dims_(std::move(dims)),
        data_(std::make_shared<std::vector<T>>(checked_numel(dims_), T(0))) {}

  static TensorT full(std::vector<int> dims, T v) {
    TensorT t(std::move(dims));
    for (auto& x : *t.data_) x = v;
    return t;
  }

  static TensorT from_values(std::vector<int> dims, std::vector<T> values) {
    TensorT t;
    if (checked_numel(dims) != values.size()) {
      throw ConfigError("tensor: value count does not match dims");
    }
    t.dims_ = std::move(dims);
    t.data_ = std::make_shared<std::vector<T>>(std::move(values));
    return t;
  }

  static TensorT randn(std::vector<int> dims, Rng& rng, double stddev) {
    TensorT t(std::move(dims));
    for (auto& x : *t.data_) x = static_cast<T>(rng.normal() * stddev);
    return t;
  }

  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_->size(); }
  bool empty() const { return data_->empty(); }

  T* data() { return data_->data(); }
  const T* data() const { return data_->data(); }
  std::shared_ptr<std::vector<T>> storage() const { return data_; }

  T& operator[](std::size_t i) { return (*data_)[i]; }
  const T& operator[](std::size_t i) const { return (*data_)[i]; }

  T& at(int i) { return (*data_)[flat(i)]; }
  T& at(int i, int j) { return (*data_)[flat(i, j)]; }
  T& at(int i, int j, int k) { return (*data_)[flat(i, j, k)]; }
  T& at(int i, int j, int k, int l) { return (*data_)[flat(i, j, k, l)]; }
  const T& at(int i) const { return (*data_)[flat(i)]; }
  const T& at(int i, int j) const { return (*data_)[flat(i, j)]; }
  const T& at(int i, int j, int k) const { return (*data_)[flat(i, j, k)]; }
  const T& at(int i, int j, int k, int l) const { return (*data_)[flat(i, j, k, l)]; }

  bool same_dims(const TensorT& other) const { return dims_ == other.dims_; }

  bool all_finite() const {
    for (const T& x : *data_) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  void fill(T v) {
    for (auto& x : *data_) x = v;
  }

  // Deep copy with fresh storage.
  TensorT clone() const {
    TensorT t;
    t.dims_ = dims_;
    t.data_ = std::make_shared<std::vector<T>>(*data_);
    return t;
  }

  template <class U>
  TensorT<U> cast() const {
    std::vector<U> out(data_->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<U>((*data_)[i]);
    }
    return TensorT<U>::from_values(dims_, std::move(out));
  }

  std::string dims_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

 private:
  static std::size_t checked_numel(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) {
      if (d <= 0) throw ConfigError("tensor: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t flat(int i) const { return static_cast<std::size_t>(i); }
  std::size_t flat(int i, int j) const {
    return static_cast<std::size_t>(i) * dims_[1] + j;
  }
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k;
  }
  std::size_t flat(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k) * dims_[3] + l;
  }

  std::vector<int> dims_;
  std::shared_ptr<std::vector<T>> data_;
};

using Tensor = TensorT<float>;

template <class T>
void require_dims(const TensorT<T>& t, const std::vector<int>& dims, const char* what) {
  if (t.dims() != dims) {
    throw ConfigError(std::string(what) + ": dimension mismatch, got " + t.dims_str());
  }
}

}  // namespace peneo
