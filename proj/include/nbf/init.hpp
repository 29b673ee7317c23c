#pragma once

#include <cmath>

#include "nbf/tensor.hpp"

namespace nbf {

namespace init {

inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Uniform in +-1/sqrt(fan_in).
template <class S>
void uniform_fanin(Parameter<S>& p, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(std::max<int64_t>(1, fan_in)));
  for (S& v : p.value.v) v = S((2.0 * uniform01(rng) - 1.0) * bound);
}

template <class S>
void constant(Parameter<S>& p, double value) {
  for (S& v : p.value.v) v = S(value);
}

/// Orthogonalize each [dim x dim] block of a [blocks*dim x dim] matrix via
/// modified Gram-Schmidt on a Gaussian draw (recurrent weights).
template <class S>
void orthogonal_blocks(Parameter<S>& p, int64_t dim, Rng& rng) {
  const int64_t rows = p.value.shape[0];
  NBF_REQUIRE(p.value.shape.size() == 2 && p.value.shape[1] == dim && rows % dim == 0,
              "orthogonal init: shape must be [k*dim x dim]");
  auto gauss = [&rng]() {
    const double u1 = std::max(uniform01(rng), 1e-12), u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  };
  std::vector<double> block(size_t(dim) * size_t(dim));
  for (int64_t b = 0; b < rows / dim; ++b) {
    for (double& v : block) v = gauss();
    for (int64_t i = 0; i < dim; ++i) {
      double* ri = block.data() + i * dim;
      for (int64_t j = 0; j < i; ++j) {
        const double* rj = block.data() + j * dim;
        double dot = 0;
        for (int64_t k = 0; k < dim; ++k) dot += ri[k] * rj[k];
        for (int64_t k = 0; k < dim; ++k) ri[k] -= dot * rj[k];
      }
      double nrm = 0;
      for (int64_t k = 0; k < dim; ++k) nrm += ri[k] * ri[k];
      nrm = std::sqrt(std::max(nrm, 1e-30));
      for (int64_t k = 0; k < dim; ++k) ri[k] /= nrm;
    }
    for (int64_t i = 0; i < dim; ++i)
      for (int64_t j = 0; j < dim; ++j)
        p.value.v[size_t((b * dim + i) * dim + j)] = S(block[size_t(i * dim + j)]);
  }
}

}  // namespace init

}  // namespace nbf
