#pragma once

#include <vector>

#include "nbf/covariance.hpp"
#include "nbf/hermitian_eig.hpp"

namespace nbf {

enum class BeamKind { Mvdr, Gev, RnnGev, GrnnBf };

const char* beam_kind_name(BeamKind kind);
BeamKind beam_kind_from(const std::string& name);  // throws ConfigError on unknown names

/// Per-frequency complex weight vectors, chunk-level [F x M] or frame-level
/// [T x F x M] (frames == 0 marks chunk-level).
struct BeamWeights {
  BeamKind kind = BeamKind::Mvdr;
  int frames = 0, bins = 0, mics = 0;
  std::vector<cdouble> data;

  cdouble& chunk_at(int f, int m) { return data[size_t(f) * size_t(mics) + size_t(m)]; }
  cdouble chunk_at(int f, int m) const { return data[size_t(f) * size_t(mics) + size_t(m)]; }
  cdouble& frame_at(int t, int f, int m) {
    return data[(size_t(t) * size_t(bins) + size_t(f)) * size_t(mics) + size_t(m)];
  }
  cdouble frame_at(int t, int f, int m) const {
    return data[(size_t(t) * size_t(bins) + size_t(f)) * size_t(mics) + size_t(m)];
  }
  bool chunk_level() const { return frames == 0; }
};

constexpr double kDefaultDiagonalLoading = 1e-5;

/// Diagonally loaded copy: phi + delta * (trace(phi)/M) * I.
std::vector<cdouble> diagonal_load(const cdouble* phi, int mics, double delta);

/// MVDR solution w = loaded(phi_n)^-1 v / (v^H loaded(phi_n)^-1 v), with the
/// steering vector taken as the principal eigenvector of phi_s per bin
/// (unit norm, first nonzero entry real-positive).
BeamWeights mvdr_weights(const ChunkCovariance& phi_s, const ChunkCovariance& phi_n,
                         double loading = kDefaultDiagonalLoading);

/// MVDR with an externally supplied steering vector (one row per bin,
/// already normalized to the solver's convention).
BeamWeights mvdr_weights_steered(const std::vector<std::vector<cdouble>>& steering,
                                 const ChunkCovariance& phi_n,
                                 double loading = kDefaultDiagonalLoading);

/// GEV solution: principal generalized eigenvector of
/// phi_s w = lambda loaded(phi_n) w, unit-norm and phase-fixed.
/// eigenvalues_out, when given, receives the maximal lambda per bin.
BeamWeights gev_weights(const ChunkCovariance& phi_s, const ChunkCovariance& phi_n,
                        double loading = kDefaultDiagonalLoading,
                        std::vector<double>* eigenvalues_out = nullptr);

/// Output spectrogram s(t,f) = w^H Y(t,f); chunk-level weights broadcast
/// over frames. Result has one channel.
ComplexSpectrogram apply_beamformer(const BeamWeights& weights, const ComplexSpectrogram& mix);

}  // namespace nbf
