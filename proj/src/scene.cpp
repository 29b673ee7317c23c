#include "nbf/scene.hpp"

#include <cmath>

namespace nbf {

namespace {

double angle_gap_deg(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

double uniform(Rng& rng, double lo, double hi) {
  const double u = double(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double gaussian(Rng& rng) {
  // Box-Muller, explicit so the stream does not depend on the stdlib.
  double u1 = uniform(rng, 1e-12, 1.0), u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace

void SceneSpec::validate() const {
  for (double az : interferer_azimuths) {
    const double gap = angle_gap_deg(target_azimuth, az);
    NBF_REQUIRE(gap > 0.0, "scene: interferer co-located with target");
  }
  NBF_REQUIRE(num_speakers() >= 1 && num_speakers() <= 3, "scene: 1-3 speakers supported");
  NBF_REQUIRE(sir_db >= -6.0 && sir_db <= 6.0, "scene: sir_db outside [-6, 6]");
  NBF_REQUIRE(snr_db >= 18.0 && snr_db <= 30.0, "scene: snr_db outside [18, 30]");
}

WaveBuffer pseudo_speech(uint64_t seed, int64_t length, double sample_rate) {
  NBF_REQUIRE(length > 0, "pseudo_speech: empty length");
  Rng rng(seed);

  const int num_tones = 3 + int(rng() % 4);
  struct Tone {
    double freq, phase, am_freq, am_phase, amp;
  };
  std::vector<Tone> tones(static_cast<size_t>(num_tones));
  for (int k = 0; k < num_tones; ++k) {
    Tone& tn = tones[size_t(k)];
    tn.freq = 200.0 * std::pow(16.0, uniform(rng, 0.0, 1.0));  // 200..3200 Hz, log-uniform
    tn.phase = uniform(rng, 0.0, 2.0 * kPi);
    tn.am_freq = uniform(rng, 2.0, 8.0);
    tn.am_phase = uniform(rng, 0.0, 2.0 * kPi);
    tn.amp = 1.0 / double(k + 1);
  }
  const double syl_freq = uniform(rng, 2.5, 4.5);
  const double syl_phase = uniform(rng, 0.0, 2.0 * kPi);
  const double lp_alpha = 0.85;  // one-pole lowpass for the noise floor

  WaveBuffer out(1, length, sample_rate);
  auto ch = out.channel(0);

  double tonal_energy = 0.0;
  for (int64_t n = 0; n < length; ++n) {
    const double t = double(n) / sample_rate;
    double v = 0.0;
    for (const Tone& tn : tones) {
      const double am = 0.5 * (1.0 + std::sin(2.0 * kPi * tn.am_freq * t + tn.am_phase));
      v += tn.amp * am * std::sin(2.0 * kPi * tn.freq * t + tn.phase);
    }
    ch[size_t(n)] = v;
    tonal_energy += v * v;
  }

  // Broadband floor 15 dB below the tonal part keeps every bin occupied.
  double lp = 0.0, noise_energy = 0.0;
  std::vector<double> noise(static_cast<size_t>(length));
  for (int64_t n = 0; n < length; ++n) {
    lp = lp_alpha * lp + (1.0 - lp_alpha) * gaussian(rng);
    noise[size_t(n)] = lp;
    noise_energy += lp * lp;
  }
  const double floor_gain =
      noise_energy > 0 ? std::sqrt(tonal_energy / noise_energy) * std::pow(10.0, -15.0 / 20.0) : 0.0;

  double energy = 0.0;
  for (int64_t n = 0; n < length; ++n) {
    const double t = double(n) / sample_rate;
    const double syl = 0.55 + 0.45 * std::sin(2.0 * kPi * syl_freq * t + syl_phase);
    ch[size_t(n)] = syl * (ch[size_t(n)] + floor_gain * noise[size_t(n)]);
    energy += ch[size_t(n)] * ch[size_t(n)];
  }
  const double rms = std::sqrt(energy / double(length));
  const double gain = rms > 0 ? 0.05 / rms : 0.0;
  for (int64_t n = 0; n < length; ++n) ch[size_t(n)] *= gain;
  return out;
}

WaveBuffer render_source(const WaveBuffer& mono, const ArrayGeometry& geom, double azimuth_deg,
                         const StftConfig& cfg) {
  NBF_REQUIRE(mono.channels == 1, "render_source: mono input required");
  NBF_REQUIRE(mono.length >= cfg.window_length, "render_source: input too short");
  geom.validate();

  Stft stft(cfg);
  const ComplexSpectrogram spec = stft.forward(mono);
  const SteeringVector v = steering_vector(geom, azimuth_deg, cfg, mono.sample_rate);

  const int M = geom.mics();
  ComplexSpectrogram multi(spec.frames, spec.bins, M);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < spec.frames; ++t)
    for (int f = 0; f < spec.bins; ++f)
      for (int m = 0; m < M; ++m) multi.at(t, f, m) = spec.at(t, f, 0) * v.at(f, m);

  return stft.inverse(multi, mono.sample_rate);
}

Scene mix_scene(const SceneSpec& spec, const WaveBuffer& target_mono,
                const std::vector<WaveBuffer>& interferer_monos, const WaveBuffer& noise_multich,
                const ArrayGeometry& geom, const StftConfig& cfg) {
  spec.validate();
  NBF_REQUIRE(interferer_monos.size() == spec.interferer_azimuths.size(),
              "mix_scene: interferer count mismatch");
  for (const auto& w : interferer_monos)
    NBF_REQUIRE(w.channels == 1 && w.sample_rate == target_mono.sample_rate,
                "mix_scene: sources must be mono at a common sample rate");

  const WaveBuffer target = render_source(target_mono, geom, spec.target_azimuth, cfg);
  const int M = target.channels;
  const int64_t L = target.length;

  WaveBuffer interference(M, L, target.sample_rate);
  for (size_t k = 0; k < interferer_monos.size(); ++k) {
    const WaveBuffer r =
        render_source(interferer_monos[k], geom, spec.interferer_azimuths[k], cfg);
    NBF_REQUIRE(r.length >= L, "mix_scene: interferer shorter than target");
    for (int m = 0; m < M; ++m)
      for (int64_t n = 0; n < L; ++n) interference.at(m, n) += r.at(m, n);
  }

  NBF_REQUIRE(noise_multich.channels == M && noise_multich.length >= L,
              "mix_scene: noise must cover all channels and samples");

  const double target_energy = target.energy(0);
  NBF_REQUIRE(target_energy > 0, "mix_scene: silent target");

  double interferer_gain = 0.0;
  if (!interferer_monos.empty()) {
    const double ie = interference.energy(0);
    NBF_REQUIRE(ie > 0, "mix_scene: silent interference");
    interferer_gain = std::sqrt(target_energy * std::pow(10.0, -spec.sir_db / 10.0) / ie);
  }
  double noise_energy = 0.0;
  for (int64_t n = 0; n < L; ++n) noise_energy += noise_multich.at(0, n) * noise_multich.at(0, n);
  NBF_REQUIRE(noise_energy > 0, "mix_scene: silent noise");
  const double noise_gain =
      std::sqrt(target_energy * std::pow(10.0, -spec.snr_db / 10.0) / noise_energy);

  Scene scene;
  scene.spec = spec;
  scene.target_clean = target;
  scene.noise_plus_interference = WaveBuffer(M, L, target.sample_rate);
  scene.mixture = WaveBuffer(M, L, target.sample_rate);
  for (int m = 0; m < M; ++m) {
    for (int64_t n = 0; n < L; ++n) {
      const double npi =
          interferer_gain * interference.at(m, n) + noise_gain * noise_multich.at(m, n);
      scene.noise_plus_interference.at(m, n) = npi;
      scene.mixture.at(m, n) = target.at(m, n) + npi;
    }
  }
  return scene;
}

Scene generate_scene(const SceneSpec& spec, const ArrayGeometry& geom, const StftConfig& cfg,
                     int64_t length, double sample_rate) {
  spec.validate();
  geom.validate();
  Rng master(spec.seed);
  const uint64_t target_seed = master();
  std::vector<uint64_t> interferer_seeds;
  for (size_t k = 0; k < spec.interferer_azimuths.size(); ++k)
    interferer_seeds.push_back(master());
  const uint64_t noise_seed = master();

  const WaveBuffer target = pseudo_speech(target_seed, length, sample_rate);
  std::vector<WaveBuffer> interferers;
  for (uint64_t s : interferer_seeds) interferers.push_back(pseudo_speech(s, length, sample_rate));

  // White background noise, generated directly at the rendered length.
  StftConfig cfg_checked = cfg;
  cfg_checked.validate();
  const int64_t rendered = cfg.synthesis_length(cfg.frames_for(length));
  WaveBuffer noise(geom.mics(), rendered, sample_rate);
  Rng noise_rng(noise_seed);
  for (int m = 0; m < geom.mics(); ++m) {
    auto ch = noise.channel(m);
    for (int64_t n = 0; n < rendered; ++n) ch[size_t(n)] = gaussian(noise_rng);
  }

  return mix_scene(spec, target, interferers, noise, geom, cfg);
}

}  // namespace nbf
