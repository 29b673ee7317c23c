#include "nbf/geometry.hpp"

#include <cmath>

namespace nbf {

std::vector<double> mic_delays(const ArrayGeometry& geom, double azimuth_deg) {
  geom.validate();
  const double az = azimuth_deg * kPi / 180.0;
  std::vector<double> tau(geom.positions.size());
  for (size_t m = 0; m < tau.size(); ++m)
    tau[m] = (geom.positions[m] - geom.positions[0]) * std::cos(az) / geom.speed_of_sound;
  return tau;
}

SteeringVector steering_vector(const ArrayGeometry& geom, double azimuth_deg,
                               const StftConfig& cfg, double sample_rate) {
  cfg.validate();
  const auto tau = mic_delays(geom, azimuth_deg);
  const int F = cfg.bins(), M = geom.mics();

  SteeringVector v;
  v.bins = F;
  v.mics = M;
  v.values.resize(size_t(F) * size_t(M));
  for (int f = 0; f < F; ++f) {
    const double f_hz = double(f) * sample_rate / double(cfg.fft_size);
    for (int m = 0; m < M; ++m) {
      const double phase = -2.0 * kPi * f_hz * tau[size_t(m)];
      v.values[size_t(f) * size_t(M) + size_t(m)] = cdouble(std::cos(phase), std::sin(phase));
    }
  }
  return v;
}

}  // namespace nbf
