#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "nbf/common.hpp"

namespace nbf {

/// Dense row-major tensor. 32-bit scalars for training, 64-bit for the
/// gradient-check mode.
template <class S>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<S> v;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shp) : shape(std::move(shp)), v(size_t(count(shape)), S(0)) {}
  Tensor(std::vector<int64_t> shp, std::vector<S> values) : shape(std::move(shp)), v(std::move(values)) {
    NBF_REQUIRE(int64_t(v.size()) == count(shape), "tensor: shape/data mismatch");
  }

  static int64_t count(const std::vector<int64_t>& shp) {
    int64_t n = 1;
    for (int64_t d : shp) {
      NBF_REQUIRE(d >= 0, "tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return int64_t(v.size()); }
  int64_t last_dim() const {
    NBF_REQUIRE(!shape.empty(), "tensor: scalar has no last dim");
    return shape.back();
  }
  int64_t rows() const {  // product of all but the last dimension
    return shape.empty() ? 1 : numel() / std::max<int64_t>(1, shape.back());
  }
};

/// Named trainable tensor with a persistent gradient buffer.
template <class S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  std::vector<S> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int64_t> shape)
      : name(std::move(n)), value(std::move(shape)), grad(value.v.size(), S(0)) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }
};

/// Flat registry over model parameters; names must be unique.
template <class S>
struct ParamSet {
  std::vector<Parameter<S>*> items;

  void add(Parameter<S>* p) {
    NBF_REQUIRE(p && !p->name.empty(), "params: unnamed parameter");
    for (const auto* q : items)
      NBF_REQUIRE(q->name != p->name, "params: duplicate name " + p->name);
    items.push_back(p);
  }
  void add_all(const ParamSet& other) {
    for (auto* p : other.items) add(p);
  }
  Parameter<S>* find(const std::string& name) const {
    for (auto* p : items)
      if (p->name == name) return p;
    return nullptr;
  }
  int64_t total_size() const {
    int64_t n = 0;
    for (const auto* p : items) n += p->value.numel();
    return n;
  }
  void zero_grads() {
    for (auto* p : items) p->zero_grad();
  }
};

}  // namespace nbf
