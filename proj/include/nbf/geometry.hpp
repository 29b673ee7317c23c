#pragma once

#include <vector>

#include "nbf/common.hpp"
#include "nbf/stft.hpp"

namespace nbf {

/// Non-uniform linear array, positions in meters along a line.
struct ArrayGeometry {
  std::vector<double> positions;
  double speed_of_sound = 343.0;

  void validate() const {
    NBF_REQUIRE(positions.size() >= 2, "array: need at least 2 microphones");
    for (size_t i = 1; i < positions.size(); ++i)
      NBF_REQUIRE(positions[i] > positions[i - 1], "array: positions must be strictly increasing");
    NBF_REQUIRE(speed_of_sound > 0, "array: speed of sound must be > 0");
  }
  int mics() const { return int(positions.size()); }
};

/// Per-frequency unit-modulus plane-wave phase signature, F x M.
struct SteeringVector {
  int bins = 0, mics = 0;
  std::vector<cdouble> values;  // [f * mics + m]

  cdouble at(int f, int m) const { return values[size_t(f) * size_t(mics) + size_t(m)]; }
};

/// Far-field plane-wave steering vector referenced to the first microphone:
/// v_m(f) = exp(-j 2 pi f_hz tau_m), tau_m = (x_m - x_1) cos(azimuth) / c.
SteeringVector steering_vector(const ArrayGeometry& geom, double azimuth_deg,
                               const StftConfig& cfg, double sample_rate);

/// Per-mic plane-wave delays in seconds for the given azimuth.
std::vector<double> mic_delays(const ArrayGeometry& geom, double azimuth_deg);

}  // namespace nbf
