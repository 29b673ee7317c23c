// Test-side oracles: central finite differences for the autodiff runtime and
// Eigen-based dense linear algebra for the beamformer contracts. These stay
// independent of the implementation paths they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "nbf/graph.hpp"

namespace nbf::test {

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return lo + (hi - lo) * double(rng() >> 11) * 0x1.0p-53;
}

template <class S>
Tensor<S> random_tensor(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
  Tensor<S> t(std::move(shape));
  for (S& v : t.v) v = S(uniform(rng) * scale);
  return t;
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

/// Central finite-difference check of every sampled coordinate of every
/// listed parameter against the analytic gradient. `build` must construct
/// the scalar loss from the parameters' current values on a fresh graph.
inline double max_grad_rel_err(const std::function<Graph<double>::Var(Graph<double>&)>& build,
                               const std::vector<Parameter<double>*>& params, Rng& rng,
                               int samples_per_param = 6, double h = 1e-5) {
  for (auto* p : params) p->zero_grad();
  {
    Graph<double> g;
    auto loss = build(g);
    g.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    Graph<double> g;
    return g.value(build(g)).v[0];
  };

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>& p = *params[pi];
    const int64_t n = p.value.numel();
    for (int s = 0; s < samples_per_param; ++s) {
      const int64_t i = int64_t(rng() % uint64_t(n));
      const double keep = p.value.v[size_t(i)];
      p.value.v[size_t(i)] = keep + h;
      const double up = eval();
      p.value.v[size_t(i)] = keep - h;
      const double down = eval();
      p.value.v[size_t(i)] = keep;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, rel_err(fd, analytic[pi][size_t(i)]));
    }
  }
  return worst;
}

/// Scalar loss "probe": weighted sum of an arbitrary tensor with fixed
/// random weights, so every output coordinate influences the loss.
template <class S>
typename Graph<S>::Var probe(Graph<S>& g, typename Graph<S>::Var x, uint64_t seed) {
  Rng rng(seed);
  Tensor<S> w = random_tensor<S>(g.value(x).shape, rng);
  return g.sum(g.mul(x, g.constant(std::move(w))));
}

// ---------------------------------------------------------------- Eigen side

inline Eigen::MatrixXcd to_eigen(const cdouble* a, int m) {
  Eigen::MatrixXcd out(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out(i, j) = a[i * m + j];
  return out;
}

inline Eigen::VectorXcd to_eigen_vec(const std::vector<cdouble>& v) {
  Eigen::VectorXcd out(int(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(int(i)) = v[i];
  return out;
}

/// Random Hermitian PSD matrix A = B B^H + eps I.
inline Eigen::MatrixXcd random_hpsd(int m, Rng& rng, double eps = 1e-3) {
  Eigen::MatrixXcd b(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) b(i, j) = cdouble(uniform(rng), uniform(rng));
  return b * b.adjoint() + eps * Eigen::MatrixXcd::Identity(m, m);
}

}  // namespace nbf::test
