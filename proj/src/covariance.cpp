#include "nbf/covariance.hpp"

namespace nbf {

CovarianceSequence frame_covariance(const ComplexSpectrogram& est) {
  const int T = est.frames, F = est.bins, M = est.channels;
  CovarianceSequence cov(T, F, M);
  cov.norm = CovNorm::Raw;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f)
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
          cov.at(t, f, i, j) = est.at(t, f, i) * std::conj(est.at(t, f, j));
  return cov;
}

CovarianceSequence mask_normalize(const CovarianceSequence& cov, const std::vector<cdouble>& crm) {
  NBF_REQUIRE(cov.norm == CovNorm::Raw, "mask_normalize: input must be a raw covariance");
  const int T = cov.frames, F = cov.bins, M = cov.mics;
  NBF_REQUIRE(int64_t(crm.size()) == int64_t(T) * F, "mask_normalize: crm shape mismatch");

  std::vector<double> denom(size_t(F), 0.0);
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f) denom[size_t(f)] += std::norm(crm[size_t(t) * size_t(F) + size_t(f)]);
  for (int f = 0; f < F; ++f)
    if (denom[size_t(f)] < 1e-10)
      throw Error("mask_normalize: degenerate mask at frequency " + std::to_string(f));

  CovarianceSequence out = cov;
  out.norm = CovNorm::MaskNormalized;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f) {
      const double inv = 1.0 / denom[size_t(f)];
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) out.at(t, f, i, j) *= inv;
    }
  return out;
}

ChunkCovariance chunk_covariance(const ComplexSpectrogram& spec, const RealMatrix& mask) {
  const int T = spec.frames, F = spec.bins, M = spec.channels;
  NBF_REQUIRE(mask.rows == T && mask.cols == F, "chunk_covariance: mask shape mismatch");
  for (double m : mask.data)
    NBF_REQUIRE(m >= 0.0 && m <= 1.0, "chunk_covariance: mask outside [0, 1]");

  std::vector<double> wsum(size_t(F), 0.0);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) wsum[size_t(f)] += mask.at(t, f) * mask.at(t, f);
    if (wsum[size_t(f)] <= 0.0)
      throw Error("chunk_covariance: zero mask sum at frequency " + std::to_string(f));
  }

  ChunkCovariance cov;
  cov.bins = F;
  cov.mics = M;
  cov.data.assign(size_t(F) * size_t(M) * size_t(M), cdouble(0, 0));
#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      const double w = mask.at(t, f) * mask.at(t, f);
      if (w == 0.0) continue;
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
          cov.at(f, i, j) += w * spec.at(t, f, i) * std::conj(spec.at(t, f, j));
    }
    const double inv = 1.0 / wsum[size_t(f)];
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) cov.at(f, i, j) *= inv;
  }
  return cov;
}

}  // namespace nbf
