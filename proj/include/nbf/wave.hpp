#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nbf/common.hpp"

namespace nbf {

/// Multichannel time-domain audio. Samples are stored per channel
/// (channel-major), double precision, with one shared sample rate.
struct WaveBuffer {
  int channels = 0;
  int64_t length = 0;  // samples per channel
  double sample_rate = 16000.0;
  std::vector<double> samples;  // [channels * length], channel-major

  WaveBuffer() = default;
  WaveBuffer(int ch, int64_t len, double rate)
      : channels(ch), length(len), sample_rate(rate), samples(size_t(ch) * size_t(len), 0.0) {
    NBF_REQUIRE(ch >= 1 && len >= 0, "WaveBuffer: bad shape");
    NBF_REQUIRE(rate > 0, "WaveBuffer: sample_rate must be > 0");
  }

  std::span<double> channel(int c) {
    return {samples.data() + size_t(c) * size_t(length), size_t(length)};
  }
  std::span<const double> channel(int c) const {
    return {samples.data() + size_t(c) * size_t(length), size_t(length)};
  }

  double& at(int c, int64_t n) { return samples[size_t(c) * size_t(length) + size_t(n)]; }
  double at(int c, int64_t n) const { return samples[size_t(c) * size_t(length) + size_t(n)]; }

  /// Energy of one channel, sum of squares.
  double energy(int c) const {
    double e = 0;
    for (double v : channel(c)) e += v * v;
    return e;
  }
};

}  // namespace nbf
