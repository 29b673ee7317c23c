#include "nbf/manifest.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace nbf {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  const double u = double(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

constexpr double kBucketEdges[5] = {0.0, 15.0, 45.0, 90.0, 180.0};

}  // namespace

int angle_bucket_of(double gap_deg) {
  for (int b = 0; b < 3; ++b)
    if (gap_deg <= kBucketEdges[b + 1]) return b;
  return 3;
}

SceneSpec ManifestEntry::to_scene_spec() const {
  SceneSpec spec;
  spec.target_azimuth = target_azimuth;
  spec.interferer_azimuths = interferer_azimuths;
  spec.sir_db = sir_db;
  spec.snr_db = snr_db;
  spec.seed = seed;
  return spec;
}

std::vector<ManifestEntry> make_manifest_entries(int n_scenes, uint64_t seed) {
  NBF_REQUIRE(n_scenes >= 12, "manifest: n_scenes must be >= the 12 stratification buckets");
  Rng rng(seed);

  std::vector<ManifestEntry> entries;
  entries.reserve(size_t(n_scenes));
  for (int i = 0; i < n_scenes; ++i) {
    const int cell = i % 12;
    const int bucket = cell / 3;
    const int speakers = cell % 3 + 1;

    ManifestEntry e;
    e.scene_id = i;
    e.seed = rng();
    e.angle_bucket = bucket;
    e.speaker_count = speakers;
    e.sir_db = uniform(rng, -6.0, 6.0);
    e.snr_db = uniform(rng, 18.0, 30.0);

    const double lo = std::max(kBucketEdges[bucket], 1.0);
    const double hi = kBucketEdges[bucket + 1];
    std::vector<double> gaps;
    for (int k = 0; k + 1 < speakers; ++k) {
      double g = uniform(rng, lo, hi);
      // keep interferers at least 2 degrees apart from each other
      while (!gaps.empty() && std::fabs(g - gaps.back()) < 2.0) g = uniform(rng, lo, hi);
      gaps.push_back(g);
    }
    double gap_max = 0.0;
    for (double g : gaps) gap_max = std::max(gap_max, g);

    const bool positive_side = (rng() & 1) != 0;
    if (positive_side)
      e.target_azimuth = uniform(rng, 0.0, 180.0 - gap_max);
    else
      e.target_azimuth = uniform(rng, gap_max, 180.0);
    for (double g : gaps)
      e.interferer_azimuths.push_back(positive_side ? e.target_azimuth + g : e.target_azimuth - g);

    char base[32];
    std::snprintf(base, sizeof(base), "scene_%04d", i);
    e.mixture_wav = std::string(base) + "_mix.wav";
    e.target_wav = std::string(base) + "_target.wav";
    e.noise_wav = std::string(base) + "_noise.wav";
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("manifest: cannot write " + path);
  for (const ManifestEntry& e : entries) {
    nlohmann::json j;
    j["scene_id"] = e.scene_id;
    j["seed"] = e.seed;
    j["target_azimuth"] = e.target_azimuth;
    j["interferer_azimuths"] = e.interferer_azimuths;
    j["sir_db"] = e.sir_db;
    j["snr_db"] = e.snr_db;
    j["angle_bucket"] = kAngleBucketNames[size_t(e.angle_bucket)];
    j["speaker_count"] = e.speaker_count;
    j["mixture_wav"] = e.mixture_wav;
    j["target_wav"] = e.target_wav;
    j["noise_wav"] = e.noise_wav;
    out << j.dump() << "\n";
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("manifest: cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw Error("manifest: parse error at line " + std::to_string(line_no) + ": " + ex.what());
    }
    ManifestEntry e;
    e.scene_id = j.at("scene_id").get<int>();
    e.seed = j.at("seed").get<uint64_t>();
    e.target_azimuth = j.at("target_azimuth").get<double>();
    e.interferer_azimuths = j.at("interferer_azimuths").get<std::vector<double>>();
    e.sir_db = j.at("sir_db").get<double>();
    e.snr_db = j.at("snr_db").get<double>();
    const std::string bucket = j.at("angle_bucket").get<std::string>();
    e.angle_bucket = -1;
    for (int b = 0; b < 4; ++b)
      if (bucket == kAngleBucketNames[size_t(b)]) e.angle_bucket = b;
    NBF_REQUIRE(e.angle_bucket >= 0, "manifest: unknown angle bucket " + bucket);
    e.speaker_count = j.at("speaker_count").get<int>();
    e.mixture_wav = j.at("mixture_wav").get<std::string>();
    e.target_wav = j.at("target_wav").get<std::string>();
    e.noise_wav = j.at("noise_wav").get<std::string>();
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string manifest_dir(const std::string& manifest_path) {
  const size_t slash = manifest_path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : manifest_path.substr(0, slash);
}

}  // namespace nbf
