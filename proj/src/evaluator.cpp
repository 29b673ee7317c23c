#include "nbf/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "nbf/metrics.hpp"
#include "nbf/wav_io.hpp"

namespace nbf {

std::string join_path(const std::string& dir, const std::string& rel) {
  if (rel.empty() || rel.front() == '/') return rel;
  return dir + "/" + rel;
}

double EvalReport::cell_mean(Metric metric, int angle_bucket, int speaker_count) const {
  double sum = 0;
  int count = 0;
  for (const SceneResult& s : scenes) {
    if (angle_bucket >= 0 && s.angle_bucket != angle_bucket) continue;
    if (speaker_count >= 0 && s.speaker_count != speaker_count) continue;
    switch (metric) {
      case SiSnr: sum += s.si_snr_db; break;
      case Sdr: sum += s.sdr_db; break;
      case MixSiSnr: sum += s.mix_si_snr_db; break;
      case MixSdr: sum += s.mix_sdr_db; break;
    }
    ++count;
  }
  return count == 0 ? std::nan("") : sum / count;
}

namespace {

const char* metric_name(EvalReport::Metric m) {
  switch (m) {
    case EvalReport::SiSnr: return "si_snr_db";
    case EvalReport::Sdr: return "sdr_db";
    case EvalReport::MixSiSnr: return "mixture_si_snr_db";
    case EvalReport::MixSdr: return "mixture_sdr_db";
  }
  return "?";
}

std::string cell_str(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string EvalReport::to_tsv() const {
  std::ostringstream os;
  os << "# system: " << system << "\n";
  os << "# scenes: " << scenes.size() << "\n";
  os << "# sdr is the plain energy ratio 10*log10(|s|^2 / |s_hat - s|^2); "
        "no allowed-distortion filter\n";
  os << "metric\tangle\t1SPK\t2SPK\t3SPK\tall\n";
  for (Metric m : {SiSnr, Sdr, MixSiSnr, MixSdr}) {
    for (int a = 0; a <= 4; ++a) {
      const int angle = a < 4 ? a : -1;
      os << metric_name(m) << "\t" << (a < 4 ? kAngleBucketNames[size_t(a)] : "all");
      for (int spk = 1; spk <= 3; ++spk) os << "\t" << cell_str(cell_mean(m, angle, spk));
      os << "\t" << cell_str(cell_mean(m, angle, -1)) << "\n";
    }
  }
  return os.str();
}

std::string EvalReport::to_jsonl() const {
  std::ostringstream os;
  for (const SceneResult& s : scenes) {
    nlohmann::json j;
    j["scene_id"] = s.scene_id;
    j["angle_bucket"] = kAngleBucketNames[size_t(s.angle_bucket)];
    j["speaker_count"] = s.speaker_count;
    j["si_snr_db"] = s.si_snr_db;
    j["sdr_db"] = s.sdr_db;
    j["mix_si_snr_db"] = s.mix_si_snr_db;
    j["mix_sdr_db"] = s.mix_sdr_db;
    os << j.dump() << "\n";
  }
  return os.str();
}

EvalReport evaluate_system(const std::string& name, const RunConfig& cfg,
                           const std::vector<ManifestEntry>& entries, const std::string& dir,
                           const SeparateFn& separate) {
  EvalReport report;
  report.system = name;
  report.scenes.resize(entries.size());

  std::string error;
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < int64_t(entries.size()); ++i) {
    if (failed) continue;
    try {
      const ManifestEntry& e = entries[size_t(i)];
      const WaveBuffer mix = load_wav(join_path(dir, e.mixture_wav));
      const WaveBuffer target = load_wav(join_path(dir, e.target_wav));
      NBF_REQUIRE(mix.length == target.length, "evaluate: component length mismatch");

      const WaveBuffer estimate = separate(e, mix);
      NBF_REQUIRE(estimate.channels == 1, "evaluate: estimate must be single-channel");
      const int64_t n = std::min(estimate.length, mix.length);

      const auto est = estimate.channel(0).subspan(0, size_t(n));
      const auto ref = target.channel(cfg.ref_channel).subspan(0, size_t(n));
      const auto mix_ref = mix.channel(cfg.ref_channel).subspan(0, size_t(n));

      SceneResult r;
      r.scene_id = e.scene_id;
      r.angle_bucket = e.angle_bucket;
      r.speaker_count = e.speaker_count;
      r.si_snr_db = si_snr(est, ref);
      r.sdr_db = sdr(est, ref);
      r.mix_si_snr_db = si_snr(mix_ref, ref);
      r.mix_sdr_db = sdr(mix_ref, ref);
      report.scenes[size_t(i)] = r;
    } catch (const std::exception& ex) {
#pragma omp critical
      {
        if (!failed) error = std::string("scene ") + std::to_string(entries[size_t(i)].scene_id) +
                             ": " + ex.what();
        failed = true;
      }
    }
  }
  if (failed) throw Error("evaluate: " + error);
  return report;
}

EvalReport evaluate_pipeline(Pipeline<float>& pipeline, const std::vector<ManifestEntry>& entries,
                             const std::string& dir) {
  const std::string name = std::string(beam_kind_name(pipeline.kind())) + " (" +
                           pipeline.config().normalization + ")";
  return evaluate_system(name, pipeline.config(), entries, dir,
                         [&pipeline](const ManifestEntry& e, const WaveBuffer& mix) {
                           return pipeline.separate(mix, e.target_azimuth);
                         });
}

EvalReport evaluate_oracle_classic(BeamKind kind, const RunConfig& cfg,
                                   const std::vector<ManifestEntry>& entries,
                                   const std::string& dir) {
  NBF_REQUIRE(kind == BeamKind::Mvdr || kind == BeamKind::Gev,
              "oracle evaluation is defined for the classic kinds");
  const Stft stft(cfg.stft_config());
  auto fn = [&, kind](const ManifestEntry& e, const WaveBuffer& mix) {
    const WaveBuffer target = load_wav(join_path(dir, e.target_wav));
    const WaveBuffer noise = load_wav(join_path(dir, e.noise_wav));

    WaveBuffer target_ref(1, target.length, target.sample_rate);
    WaveBuffer noise_ref(1, noise.length, noise.sample_rate);
    for (int64_t n = 0; n < target.length; ++n) {
      target_ref.at(0, n) = target.at(cfg.ref_channel, n);
      noise_ref.at(0, n) = noise.at(cfg.ref_channel, n);
    }
    const ComplexSpectrogram spec_mix = stft.forward(mix);
    const ComplexSpectrogram spec_s = stft.forward(target_ref);
    const ComplexSpectrogram spec_n = stft.forward(noise_ref);

    RealMatrix mask_s(spec_mix.frames, spec_mix.bins), mask_n(spec_mix.frames, spec_mix.bins);
    for (int t = 0; t < spec_mix.frames; ++t)
      for (int f = 0; f < spec_mix.bins; ++f) {
        const double s = std::abs(spec_s.at(t, f, 0));
        const double n = std::abs(spec_n.at(t, f, 0));
        mask_s.at(t, f) = s / (s + n + 1e-12);
        mask_n.at(t, f) = n / (s + n + 1e-12);
      }

    const ChunkCovariance phi_s = chunk_covariance(spec_mix, mask_s);
    const ChunkCovariance phi_n = chunk_covariance(spec_mix, mask_n);
    const BeamWeights w = kind == BeamKind::Mvdr
                              ? mvdr_weights(phi_s, phi_n, cfg.diagonal_loading)
                              : gev_weights(phi_s, phi_n, cfg.diagonal_loading);
    return stft.inverse(apply_beamformer(w, spec_mix), mix.sample_rate);
  };
  return evaluate_system(std::string("oracle-mask ") + beam_kind_name(kind), cfg, entries, dir, fn);
}

EvalReport evaluate_identity(const RunConfig& cfg, const std::vector<ManifestEntry>& entries,
                             const std::string& dir) {
  return evaluate_system("identity (mixture channel 1)", cfg, entries, dir,
                         [&cfg](const ManifestEntry&, const WaveBuffer& mix) {
                           WaveBuffer out(1, mix.length, mix.sample_rate);
                           for (int64_t n = 0; n < mix.length; ++n)
                             out.at(0, n) = mix.at(cfg.ref_channel, n);
                           return out;
                         });
}

}  // namespace nbf
