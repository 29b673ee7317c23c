#pragma once

#include <cstdint>
#include <vector>

#include "nbf/geometry.hpp"
#include "nbf/stft.hpp"
#include "nbf/wave.hpp"

namespace nbf {

struct SceneSpec {
  double target_azimuth = 90.0;
  std::vector<double> interferer_azimuths;
  double sir_db = 0.0;   // reference-channel SIR over the summed interferers
  double snr_db = 20.0;  // reference-channel SNR of the background noise
  uint64_t seed = 0;

  int num_speakers() const { return 1 + int(interferer_azimuths.size()); }
  void validate() const;
};

struct Scene {
  WaveBuffer mixture;                  // M channels
  WaveBuffer target_clean;             // M channels
  WaveBuffer noise_plus_interference;  // M channels
  SceneSpec spec;
};

/// Deterministic pseudo-speech: AM-modulated multi-tone plus lowpassed
/// noise, unit RMS, fully determined by the seed.
WaveBuffer pseudo_speech(uint64_t seed, int64_t length, double sample_rate);

/// Render a mono source to M channels by applying the far-field steering
/// phase in the STFT domain. Output length is the STFT synthesis length.
WaveBuffer render_source(const WaveBuffer& mono, const ArrayGeometry& geom, double azimuth_deg,
                         const StftConfig& cfg);

/// Mix rendered target/interferers/noise at the SIR/SNR given in the spec,
/// measured on the reference channel (mic 1). Components are kept separate;
/// mixture = target_clean + noise_plus_interference holds exactly.
Scene mix_scene(const SceneSpec& spec, const WaveBuffer& target_mono,
                const std::vector<WaveBuffer>& interferer_monos, const WaveBuffer& noise_multich,
                const ArrayGeometry& geom, const StftConfig& cfg);

/// Generate the complete scene for a spec: pseudo-speech sources from the
/// seed, rendering, and SIR/SNR mixing.
Scene generate_scene(const SceneSpec& spec, const ArrayGeometry& geom, const StftConfig& cfg,
                     int64_t length, double sample_rate);

}  // namespace nbf
