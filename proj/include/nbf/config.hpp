#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "nbf/common.hpp"
#include "nbf/geometry.hpp"
#include "nbf/stft.hpp"

namespace nbf {

/// Sectioned key-value text: [section] lines followed by key = value lines,
/// '#'/';' comments. Returns section -> ordered (key, value) pairs.
std::map<std::string, std::vector<std::pair<std::string, std::string>>> parse_ini(
    const std::string& text);

enum class Provenance { Default, File, Flag };
const char* provenance_name(Provenance p);

/// One configuration for the whole pipeline. Unknown keys are rejected;
/// missing keys keep their documented defaults; echo() prints every value
/// with its provenance.
struct RunConfig {
  // stft
  int fft_size = 512;
  int window_length = 512;
  int hop = 256;
  double sample_rate = 16000.0;
  // array
  std::vector<double> positions = {0.0, 0.04, 0.10, 0.18};
  double speed_of_sound = 343.0;
  // features
  int ref_channel = 0;
  // estimator
  int blocks = 2;
  int layers_per_block = 4;
  int channels = 64;
  int kernel = 3;
  int crf_half_width = 1;
  // beamformer
  std::string beam_kind = "grnn-bf";
  std::string normalization = "layer-norm";  // mask-norm | layer-norm
  double diagonal_loading = 1e-5;
  int rnn_hidden = 64;
  int dnn_hidden = 64;
  // training
  double chunk_seconds = 4.0;
  double lr = 1e-4;
  double max_grad_norm = 10.0;
  int64_t steps = 1000;
  int batch_size = 1;
  uint64_t seed = 17;
  int checkpoint_every = 100;
  // evaluation
  bool write_per_scene = true;

  std::map<std::string, Provenance> provenance;  // "section.key"

  static RunConfig defaults();
  static RunConfig from_file(const std::string& path);
  static RunConfig from_ini_text(const std::string& text, Provenance origin = Provenance::File);

  void apply_ini_text(const std::string& text, Provenance origin);
  /// "section.key=value" override, wins over file values.
  void apply_override(const std::string& assignment);

  void validate() const;
  std::string serialize() const;
  void echo(std::ostream& os) const;

  StftConfig stft_config() const { return {fft_size, window_length, hop}; }
  ArrayGeometry geometry() const { return {positions, speed_of_sound}; }
  int mics() const { return int(positions.size()); }
  int64_t chunk_samples() const { return int64_t(chunk_seconds * sample_rate); }
};

}  // namespace nbf
