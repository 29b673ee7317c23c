#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nbf/scene.hpp"

namespace nbf {

inline constexpr std::array<const char*, 4> kAngleBucketNames = {"0-15", "15-45", "45-90",
                                                                 "90-180"};

/// Bucket index for a target/interferer angle gap in degrees.
int angle_bucket_of(double gap_deg);

struct ManifestEntry {
  int scene_id = 0;
  uint64_t seed = 0;
  double target_azimuth = 0.0;
  std::vector<double> interferer_azimuths;
  double sir_db = 0.0;
  double snr_db = 20.0;
  int angle_bucket = 0;   // index into kAngleBucketNames
  int speaker_count = 1;  // 1..3
  std::string mixture_wav, target_wav, noise_wav;  // relative to the manifest file

  SceneSpec to_scene_spec() const;
};

/// Deterministic stratified draw over the 4 angle buckets x 3 speaker
/// counts. Scenes are assigned to cells round-robin, so n divisible by 12
/// gives perfectly balanced buckets.
std::vector<ManifestEntry> make_manifest_entries(int n_scenes, uint64_t seed);

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

/// Directory of the manifest file, for resolving the relative wav paths.
std::string manifest_dir(const std::string& manifest_path);

}  // namespace nbf
