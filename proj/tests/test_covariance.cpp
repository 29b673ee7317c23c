#include "doctest.h"
#include "nbf/covariance.hpp"
#include "nbf/hermitian_eig.hpp"
#include "nbf/ref_kernels.hpp"
#include "oracles.hpp"

using namespace nbf;
using namespace nbf::test;

namespace {

ComplexSpectrogram random_spec(int t, int f, int m, uint64_t seed) {
  ComplexSpectrogram spec(t, f, m);
  Rng rng(seed);
  for (cdouble& v : spec.data) v = cdouble(uniform(rng), uniform(rng));
  return spec;
}

}  // namespace

TEST_CASE("basis-vector frame gives a one-hot diagonal covariance") {
  ComplexSpectrogram est(1, 1, 3);
  est.at(0, 0, 0) = 1.0;
  const CovarianceSequence cov = frame_covariance(est);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(cov.at(0, 0, i, j) - (i == 0 && j == 0 ? cdouble(1, 0) : cdouble(0, 0))) <
            1e-15);
}

TEST_CASE("frame covariances are Hermitian PSD with trace = |s|^2") {
  const ComplexSpectrogram est = random_spec(4, 5, 3, 41);
  const CovarianceSequence cov = frame_covariance(est);
  for (int t = 0; t < 4; ++t)
    for (int f = 0; f < 5; ++f) {
      double trace = 0, energy = 0;
      for (int i = 0; i < 3; ++i) {
        trace += cov.at(t, f, i, i).real();
        energy += std::norm(est.at(t, f, i));
        for (int j = 0; j < 3; ++j)
          CHECK(std::abs(cov.at(t, f, i, j) - std::conj(cov.at(t, f, j, i))) < 1e-12);
      }
      CHECK(trace == doctest::Approx(energy).epsilon(1e-12));
      std::vector<cdouble> m(9);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[size_t(i * 3 + j)] = cov.at(t, f, i, j);
      const HermitianEig eig = hermitian_eig(m.data(), 3);
      CHECK(eig.eigenvalues[0] >= -1e-8 * trace);
    }
}

TEST_CASE("frame covariance matches the outer-product reference") {
  const ComplexSpectrogram est = random_spec(3, 4, 3, 42);
  const CovarianceSequence cov = frame_covariance(est);
  const auto ref =
      ref::frame_covariance(std::vector<cdouble>(est.data.begin(), est.data.end()), 3, 4, 3);
  for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(cov.data[i] - ref[i]) < 1e-14);
}

TEST_CASE("unit-magnitude masks divide by the frame count") {
  const ComplexSpectrogram est = random_spec(6, 3, 2, 43);
  const CovarianceSequence raw = frame_covariance(est);
  std::vector<cdouble> crm(size_t(6) * 3, cdouble(0.6, 0.8));  // |crm| = 1
  const CovarianceSequence norm = mask_normalize(raw, crm);
  CHECK(norm.norm == CovNorm::MaskNormalized);
  for (size_t i = 0; i < raw.data.size(); ++i)
    CHECK(std::abs(norm.data[i] - raw.data[i] / 6.0) < 1e-12);
}

TEST_CASE("all-zero masks are a declared error") {
  const ComplexSpectrogram est = random_spec(4, 3, 2, 44);
  const CovarianceSequence raw = frame_covariance(est);
  std::vector<cdouble> crm(size_t(4) * 3, cdouble(0, 0));
  CHECK_THROWS_WITH_AS((void)mask_normalize(raw, crm), doctest::Contains("degenerate mask"),
                       Error);
}

TEST_CASE("mask normalization matches the direct-sum reference") {
  const ComplexSpectrogram est = random_spec(5, 4, 3, 45);
  const CovarianceSequence raw = frame_covariance(est);
  Rng rng(46);
  std::vector<cdouble> crm(size_t(5) * 4);
  for (cdouble& v : crm) v = cdouble(uniform(rng), uniform(rng)) + cdouble(0.5, 0);
  const CovarianceSequence norm = mask_normalize(raw, crm);
  const auto ref = ref::mask_normalize(raw.data, crm, 5, 4, 3);
  for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(norm.data[i] - ref[i]) < 1e-12);
}

TEST_CASE("unit mask reduces chunk covariance to the sample covariance") {
  const ComplexSpectrogram spec = random_spec(7, 3, 3, 47);
  RealMatrix mask(7, 3);
  for (double& v : mask.data) v = 1.0;
  const ChunkCovariance cov = chunk_covariance(spec, mask);
  for (int f = 0; f < 3; ++f)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        cdouble acc(0, 0);
        for (int t = 0; t < 7; ++t) acc += spec.at(t, f, i) * std::conj(spec.at(t, f, j));
        CHECK(std::abs(cov.at(f, i, j) - acc / 7.0) < 1e-12);
      }
}

TEST_CASE("a single-frame mask selects that frame's outer product") {
  const ComplexSpectrogram spec = random_spec(5, 2, 3, 48);
  RealMatrix mask(5, 2);
  mask.at(3, 0) = 1.0;
  mask.at(3, 1) = 1.0;
  const ChunkCovariance cov = chunk_covariance(spec, mask);
  for (int f = 0; f < 2; ++f)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(cov.at(f, i, j) - spec.at(3, f, i) * std::conj(spec.at(3, f, j))) < 1e-12);
}

TEST_CASE("chunk covariance matches the reference and validates the mask") {
  const ComplexSpectrogram spec = random_spec(5, 3, 3, 49);
  Rng rng(50);
  RealMatrix mask(5, 3);
  for (double& v : mask.data) v = 0.5 * (uniform(rng) + 1.0);
  const ChunkCovariance cov = chunk_covariance(spec, mask);
  const auto ref = ref::chunk_covariance(spec, mask);
  for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(cov.data[i] - ref[i]) < 1e-12);

  RealMatrix bad(5, 3);
  bad.at(0, 0) = 1.5;  // outside [0, 1]
  CHECK_THROWS_AS((void)chunk_covariance(spec, bad), Error);
  RealMatrix zeros(5, 3);
  CHECK_THROWS_WITH_AS((void)chunk_covariance(spec, zeros), doctest::Contains("zero mask sum"),
                       Error);
}

TEST_CASE("layer normalization of covariances is invariant to input scale up to the affine") {
  Rng rng(51);
  const int T = 3, F = 2, M = 2;
  Tensor<double> s = random_tensor<double>({T, F, 2 * M}, rng);
  Tensor<double> s2 = s;
  for (double& v : s2.v) v *= 3.0;  // scales raw covariance by 9

  Parameter<double> gamma("g", {2 * M * M}), beta("b", {2 * M * M});
  for (double& v : gamma.value.v) v = 1.0;

  Graph<double> g;
  auto n1 = g.layer_norm(g.outer_covariance(g.constant(s), M), g.param(gamma), g.param(beta));
  auto n2 = g.layer_norm(g.outer_covariance(g.constant(s2), M), g.param(gamma), g.param(beta));
  for (int64_t i = 0; i < g.value(n1).numel(); ++i)
    CHECK(g.value(n1).v[size_t(i)] == doctest::Approx(g.value(n2).v[size_t(i)]).epsilon(1e-6));
}
