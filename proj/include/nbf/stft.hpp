#pragma once

#include <complex>
#include <vector>

#include "nbf/wave.hpp"

namespace nbf {

struct StftConfig {
  int fft_size = 512;
  int window_length = 512;  // 32 ms at 16 kHz
  int hop = 256;            // 50% overlap

  void validate() const;
  int bins() const { return fft_size / 2 + 1; }
  /// Frames produced for a signal of the given length; frames lie fully
  /// inside the signal, the uncovered tail is dropped.
  int64_t frames_for(int64_t length) const { return (length - window_length) / hop + 1; }
  int64_t synthesis_length(int64_t frames) const {
    return (frames - 1) * int64_t(hop) + window_length;
  }
};

/// T x F x M one-sided complex spectrogram, channel index fastest.
struct ComplexSpectrogram {
  int frames = 0, bins = 0, channels = 0;
  std::vector<cdouble> data;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(int t, int f, int m)
      : frames(t), bins(f), channels(m), data(size_t(t) * size_t(f) * size_t(m)) {}

  cdouble& at(int t, int f, int m) {
    return data[(size_t(t) * size_t(bins) + size_t(f)) * size_t(channels) + size_t(m)];
  }
  cdouble at(int t, int f, int m) const {
    return data[(size_t(t) * size_t(bins) + size_t(f)) * size_t(channels) + size_t(m)];
  }
};

/// Windowed STFT/iSTFT pair with precomputed analysis and normalized
/// synthesis windows. Interior samples reconstruct exactly; the first and
/// last (window_length - hop) samples are attenuated by partial overlap.
class Stft {
 public:
  explicit Stft(const StftConfig& cfg);

  const StftConfig& config() const { return cfg_; }

  ComplexSpectrogram forward(const WaveBuffer& wave) const;
  WaveBuffer inverse(const ComplexSpectrogram& spec, double sample_rate) const;

  const std::vector<double>& analysis_window() const { return analysis_; }
  const std::vector<double>& synthesis_window() const { return synthesis_; }

 private:
  StftConfig cfg_;
  std::vector<double> analysis_;   // periodic Hann, length window_length
  std::vector<double> synthesis_;  // analysis / hop-periodic power envelope
};

/// In-place radix-2 FFT, size must be a power of two. inverse=true applies
/// the conjugate transform without the 1/N factor.
void fft_radix2(std::vector<cdouble>& x, bool inverse);

}  // namespace nbf
