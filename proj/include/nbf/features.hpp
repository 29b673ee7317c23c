#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nbf/geometry.hpp"
#include "nbf/stft.hpp"

namespace nbf {

/// Row-major [rows x cols] real matrix used for feature blocks.
struct RealMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> data;

  RealMatrix() = default;
  RealMatrix(int64_t r, int64_t c) : rows(r), cols(c), data(size_t(r) * size_t(c), 0.0) {}
  double& at(int64_t r, int64_t c) { return data[size_t(r) * size_t(cols) + size_t(c)]; }
  double at(int64_t r, int64_t c) const { return data[size_t(r) * size_t(cols) + size_t(c)]; }
};

/// Names and spans of the blocks inside a feature row:
/// LPS [F], per pair (cos, sin) IPD [2F each], directional feature [F].
struct FeatureLayout {
  int bins = 0;
  int mics = 0;
  std::vector<std::pair<int, int>> pairs;  // (i, j), phase difference i minus j

  int pair_count() const { return int(pairs.size()); }
  int64_t dim() const { return int64_t(bins) * (2 + 2 * pair_count()); }
  int64_t lps_offset() const { return 0; }
  int64_t ipd_offset() const { return bins; }
  int64_t df_offset() const { return int64_t(bins) + 2 * int64_t(bins) * pair_count(); }

  /// Compact descriptor embedded in checkpoints so inference can validate
  /// input dimensionality.
  std::string describe() const;
  static FeatureLayout parse(const std::string& descriptor);

  static FeatureLayout against_reference(int bins, int mics, int ref_channel = 0);
};

constexpr double kLpsEpsilon = 1e-8;

/// log(|Y_ref|^2 + eps), [T x F].
RealMatrix lps(const ComplexSpectrogram& spec, int ref_channel);

/// Raw phase differences angle(Y_i) - angle(Y_j) per pair, [T x F x P].
RealMatrix ipd_phase(const ComplexSpectrogram& spec, const std::vector<std::pair<int, int>>& pairs);

/// (cos, sin) encoding of the pairwise phase differences, [T x F x P x 2].
/// Bins where both magnitudes are below 1e-12 emit (1, 0).
RealMatrix ipd(const ComplexSpectrogram& spec, const std::vector<std::pair<int, int>>& pairs);

/// DOA-guided directional feature: mean over pairs of
/// cos(ipd_phase - steering phase difference), in [-1, 1]. [T x F].
RealMatrix directional_feature(const RealMatrix& ipd_phases, const SteeringVector& steering,
                               const std::vector<std::pair<int, int>>& pairs);

/// Full [T x D] feature tensor in the layout's block order.
RealMatrix extract_features(const ComplexSpectrogram& spec, const FeatureLayout& layout,
                            const SteeringVector& steering, int ref_channel = 0);

}  // namespace nbf
