#include <cmath>

#include "doctest.h"
#include "nbf/manifest.hpp"
#include "nbf/scene.hpp"

using namespace nbf;

namespace {

const ArrayGeometry kDesk{{0.0, 0.04, 0.10, 0.18}, 343.0};

double energy(std::span<const double> x, int64_t from, int64_t to) {
  double e = 0;
  for (int64_t i = from; i < to; ++i) e += x[size_t(i)] * x[size_t(i)];
  return e;
}

}  // namespace

TEST_CASE("broadside steering vector is identically one") {
  const SteeringVector v = steering_vector(kDesk, 90.0, StftConfig{}, 16000.0);
  for (const cdouble& x : v.values) CHECK(std::abs(x - cdouble(1, 0)) < 1e-12);
}

TEST_CASE("co-located microphones are rejected") {
  ArrayGeometry bad{{0.0, 0.0, 0.1}, 343.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("two-mic endfire phase matches the plane-wave formula") {
  const ArrayGeometry pair{{0.0, 0.05}, 343.0};
  const SteeringVector v = steering_vector(pair, 0.0, StftConfig{}, 16000.0);
  const int bin_1khz = 32;  // 32 * 16000 / 512 = 1000 Hz exactly
  const double phase = std::arg(v.at(bin_1khz, 1) / v.at(bin_1khz, 0));
  CHECK(phase == doctest::Approx(-2.0 * kPi * 1000.0 * 0.05 / 343.0).epsilon(1e-6));
  // DC entry is one for every mic
  CHECK(std::abs(v.at(0, 1) - cdouble(1, 0)) < 1e-12);
}

TEST_CASE("steering vectors have unit modulus everywhere") {
  const SteeringVector v = steering_vector(kDesk, 37.0, StftConfig{}, 16000.0);
  for (const cdouble& x : v.values) CHECK(std::abs(std::abs(x) - 1.0) < 1e-12);
}

TEST_CASE("broadside rendering copies the source to all channels") {
  const WaveBuffer src = pseudo_speech(100, 16000, 16000.0);
  const WaveBuffer multi = render_source(src, kDesk, 90.0, StftConfig{});
  REQUIRE(multi.channels == 4);
  for (int m = 0; m < 4; ++m)
    for (int64_t n = 512; n < multi.length - 512; ++n)
      CHECK(multi.at(m, n) == doctest::Approx(src.at(0, n)).epsilon(1e-9));
}

TEST_CASE("rendered channel cross-correlates at the rounded delay") {
  const ArrayGeometry wide{{0.0, 0.5}, 343.0};
  const WaveBuffer src = pseudo_speech(200, 16000, 16000.0);
  const WaveBuffer multi = render_source(src, wide, 0.0, StftConfig{});
  const double tau = 0.5 * std::cos(0.0) / 343.0;
  const auto expected_lag = int64_t(std::lround(tau * 16000.0));

  double best = -1e300;
  int64_t best_lag = -1000;
  for (int64_t lag = -40; lag <= 40; ++lag) {
    double acc = 0;
    for (int64_t n = 1024; n < multi.length - 1024; ++n) acc += multi.at(1, n) * multi.at(0, n - lag);
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == expected_lag);
}

TEST_CASE("rendering zero input yields zero output") {
  WaveBuffer zero(1, 8192, 16000.0);
  const WaveBuffer multi = render_source(zero, kDesk, 45.0, StftConfig{});
  for (double v : multi.samples) CHECK(v == 0.0);
}

TEST_CASE("rendering preserves per-channel energy within 1% on the interior") {
  const WaveBuffer src = pseudo_speech(300, 32000, 16000.0);
  const WaveBuffer multi = render_source(src, kDesk, 25.0, StftConfig{});
  const double ref = energy(src.channel(0), 1024, multi.length - 1024);
  for (int m = 0; m < multi.channels; ++m) {
    const double e = energy(multi.channel(m), 1024, multi.length - 1024);
    CHECK(std::fabs(e - ref) / ref < 0.01);
  }
}

TEST_CASE("mix_scene hits the requested SIR and SNR and is exactly additive") {
  SceneSpec spec;
  spec.target_azimuth = 60.0;
  spec.interferer_azimuths = {110.0};
  spec.sir_db = 0.0;
  spec.snr_db = 30.0;
  spec.seed = 7;

  const int64_t len = 32000;
  const WaveBuffer target = pseudo_speech(1, len, 16000.0);
  const std::vector<WaveBuffer> interferers = {pseudo_speech(2, len, 16000.0)};
  const StftConfig cfg;
  const int64_t rendered = cfg.synthesis_length(cfg.frames_for(len));
  WaveBuffer noise(4, rendered, 16000.0);
  Rng rng(99);
  for (double& v : noise.samples) v = double(rng() >> 11) * 0x1.0p-53 - 0.5;

  const Scene scene = mix_scene(spec, target, interferers, noise, kDesk, cfg);

  // additivity is exact by construction
  for (size_t i = 0; i < scene.mixture.samples.size(); ++i)
    CHECK(scene.mixture.samples[i] ==
          scene.target_clean.samples[i] + scene.noise_plus_interference.samples[i]);

  // re-derive the gains the mixer used and verify SIR = 0 dB within 1e-9
  const WaveBuffer rendered_int = render_source(interferers[0], kDesk, 110.0, cfg);
  const double et = scene.target_clean.energy(0);
  const double gain = std::sqrt(et * std::pow(10.0, -spec.sir_db / 10.0) / rendered_int.energy(0));
  double e_int = 0;
  for (int64_t n = 0; n < scene.mixture.length; ++n) {
    const double v = gain * rendered_int.at(0, n);
    e_int += v * v;
  }
  CHECK(std::fabs(10.0 * std::log10(et / e_int) - spec.sir_db) < 1e-9);
}

TEST_CASE("noise-only scene measures the requested SNR") {
  SceneSpec spec;
  spec.target_azimuth = 80.0;
  spec.sir_db = 0.0;
  spec.snr_db = 30.0;
  spec.seed = 8;
  const Scene scene = generate_scene(spec, kDesk, StftConfig{}, 32000, 16000.0);
  const double et = scene.target_clean.energy(0);
  const double en = scene.noise_plus_interference.energy(0);
  CHECK(std::fabs(10.0 * std::log10(et / en) - 30.0) < 0.01);
}

TEST_CASE("silent target is rejected") {
  SceneSpec spec;
  spec.seed = 9;
  WaveBuffer silent(1, 32000, 16000.0);
  WaveBuffer noise(4, 32000, 16000.0);
  for (double& v : noise.samples) v = 0.01;
  CHECK_THROWS_WITH_AS(
      (void)mix_scene(spec, silent, {}, noise, kDesk, StftConfig{}),
      doctest::Contains("silent target"), Error);
}

TEST_CASE("scene regeneration is bit-stable") {
  SceneSpec spec;
  spec.target_azimuth = 42.0;
  spec.interferer_azimuths = {137.0};
  spec.sir_db = -3.0;
  spec.snr_db = 24.0;
  spec.seed = 4242;
  const Scene a = generate_scene(spec, kDesk, StftConfig{}, 32000, 16000.0);
  const Scene b = generate_scene(spec, kDesk, StftConfig{}, 32000, 16000.0);
  CHECK(a.mixture.samples == b.mixture.samples);
  CHECK(a.target_clean.samples == b.target_clean.samples);
}

TEST_CASE("pseudo speech is deterministic with unit-normalized rms") {
  const WaveBuffer a = pseudo_speech(55, 16000, 16000.0);
  const WaveBuffer b = pseudo_speech(55, 16000, 16000.0);
  CHECK(a.samples == b.samples);
  const double rms = std::sqrt(a.energy(0) / double(a.length));
  CHECK(rms == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("manifest generation is deterministic and stratified") {
  const auto a = make_manifest_entries(120, 77);
  const auto b = make_manifest_entries(120, 77);
  REQUIRE(a.size() == 120);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].target_azimuth == b[i].target_azimuth);
  }
  int cells[4][3] = {};
  for (const auto& e : a) ++cells[e.angle_bucket][e.speaker_count - 1];
  for (auto& row : cells)
    for (int c : row) CHECK(c == 10);
}

TEST_CASE("angle gaps land inside their buckets") {
  for (const auto& e : make_manifest_entries(48, 3)) {
    for (double az : e.interferer_azimuths) {
      const double gap = std::fabs(az - e.target_azimuth);
      CHECK(angle_bucket_of(gap) == e.angle_bucket);
      CHECK(az >= 0.0);
      CHECK(az <= 180.0);
    }
  }
}

TEST_CASE("manifests below the bucket count are rejected") {
  CHECK_THROWS_AS((void)make_manifest_entries(11, 1), Error);
}

TEST_CASE("manifest write/read round trip") {
  const auto entries = make_manifest_entries(12, 5);
  const std::string path = "/tmp/nbf_test_manifest.jsonl";
  write_manifest(path, entries);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].seed == entries[i].seed);
    CHECK(back[i].sir_db == entries[i].sir_db);
    CHECK(back[i].angle_bucket == entries[i].angle_bucket);
    CHECK(back[i].mixture_wav == entries[i].mixture_wav);
  }
  std::remove(path.c_str());
}
