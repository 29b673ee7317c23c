#pragma once

#include <cmath>
#include <unordered_map>

#include "nbf/tensor.hpp"

namespace nbf {

/// Rescale the global L2 norm of all gradients to max_norm when exceeded.
/// Returns the pre-clip norm. Non-finite gradients raise an error naming
/// the offending parameter.
template <class S>
double clip_grad_norm(ParamSet<S>& params, double max_norm) {
  double total = 0.0;
  for (const auto* p : params.items) {
    double local = 0.0;
    for (S g : p->grad) local += double(g) * double(g);
    if (!std::isfinite(local)) throw Error("non-finite gradient in parameter " + p->name);
    total += local;
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const S scale = S(max_norm / norm);
    for (auto* p : params.items)
      for (S& g : p->grad) g *= scale;
  }
  return norm;
}

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment state is keyed by parameter name so it
/// survives checkpointing.
template <class S>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  AdamConfig& config() { return cfg_; }
  int64_t step_count() const { return step_; }
  void set_step_count(int64_t s) { step_ = s; }

  void step(ParamSet<S>& params) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));
    for (auto* p : params.items) {
      State& st = state_for(*p);
      const int64_t n = p->value.numel();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        const double g = double(p->grad[size_t(i)]);
        if (!std::isfinite(g)) throw Error("non-finite gradient in parameter " + p->name);
        double m = cfg_.beta1 * double(st.m[size_t(i)]) + (1.0 - cfg_.beta1) * g;
        double v = cfg_.beta2 * double(st.v[size_t(i)]) + (1.0 - cfg_.beta2) * g * g;
        st.m[size_t(i)] = S(m);
        st.v[size_t(i)] = S(v);
        const double mhat = m / bc1, vhat = v / bc2;
        p->value.v[size_t(i)] -= S(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  /// Moment buffers for checkpointing, name -> (m, v).
  struct State {
    std::vector<S> m, v;
  };
  std::unordered_map<std::string, State>& state() { return state_; }

 private:
  State& state_for(Parameter<S>& p) {
    auto it = state_.find(p.name);
    if (it == state_.end()) {
      State st;
      st.m.assign(p.value.v.size(), S(0));
      st.v.assign(p.value.v.size(), S(0));
      it = state_.emplace(p.name, std::move(st)).first;
    }
    NBF_REQUIRE(it->second.m.size() == p.value.v.size(), "adam: state size mismatch for " + p.name);
    return it->second;
  }

  AdamConfig cfg_;
  int64_t step_ = 0;
  std::unordered_map<std::string, State> state_;
};

}  // namespace nbf
