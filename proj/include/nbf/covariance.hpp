#pragma once

#include <vector>

#include "nbf/features.hpp"
#include "nbf/stft.hpp"

namespace nbf {

enum class CovNorm { Raw, MaskNormalized, LayerNormalized };

/// Per-frame, per-frequency M x M complex matrices. Raw and mask-normalized
/// sequences are Hermitian PSD; layer-normalized ones carry no such
/// guarantee and are tagged accordingly.
struct CovarianceSequence {
  int frames = 0, bins = 0, mics = 0;
  CovNorm norm = CovNorm::Raw;
  std::vector<cdouble> data;  // [t][f][i][j]

  CovarianceSequence() = default;
  CovarianceSequence(int t, int f, int m)
      : frames(t), bins(f), mics(m), data(size_t(t) * size_t(f) * size_t(m) * size_t(m)) {}

  cdouble& at(int t, int f, int i, int j) {
    return data[((size_t(t) * size_t(bins) + size_t(f)) * size_t(mics) + size_t(i)) * size_t(mics) +
                size_t(j)];
  }
  cdouble at(int t, int f, int i, int j) const {
    return data[((size_t(t) * size_t(bins) + size_t(f)) * size_t(mics) + size_t(i)) * size_t(mics) +
                size_t(j)];
  }
};

/// Rank-1 frame covariance phi(t,f) = est(t,f) est(t,f)^H.
CovarianceSequence frame_covariance(const ComplexSpectrogram& est);

/// Divide each phi(t,f) by d(f) = sum_t |crm(t,f)|^2. crm holds the center
/// units of a cRF, [T x F]. Throws on degenerate masks.
CovarianceSequence mask_normalize(const CovarianceSequence& cov,
                                  const std::vector<cdouble>& crm);

/// Chunk-level masked covariance: per f,
/// sum_t mask^2 Y Y^H / sum_t mask^2, mask in [0,1]. Result is [F x M x M].
struct ChunkCovariance {
  int bins = 0, mics = 0;
  std::vector<cdouble> data;  // [f][i][j]
  cdouble& at(int f, int i, int j) {
    return data[(size_t(f) * size_t(mics) + size_t(i)) * size_t(mics) + size_t(j)];
  }
  cdouble at(int f, int i, int j) const {
    return data[(size_t(f) * size_t(mics) + size_t(i)) * size_t(mics) + size_t(j)];
  }
  const cdouble* matrix(int f) const { return data.data() + size_t(f) * size_t(mics) * size_t(mics); }
};
ChunkCovariance chunk_covariance(const ComplexSpectrogram& spec, const RealMatrix& mask);

}  // namespace nbf
