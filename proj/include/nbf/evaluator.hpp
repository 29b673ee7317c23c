#pragma once

#include <functional>

#include "nbf/manifest.hpp"
#include "nbf/pipeline.hpp"

namespace nbf {

struct SceneResult {
  int scene_id = 0;
  int angle_bucket = 0;
  int speaker_count = 1;
  double si_snr_db = 0, sdr_db = 0;
  double mix_si_snr_db = 0, mix_sdr_db = 0;  // channel-1 mixture baseline
};

/// Bucketed evaluation results: per-scene rows plus mean cells over the
/// angle-gap x speaker-count grid with margins.
struct EvalReport {
  std::string system;
  std::vector<SceneResult> scenes;

  enum Metric { SiSnr, Sdr, MixSiSnr, MixSdr };

  /// Mean over the cell; angle_bucket or speaker_count of -1 selects the
  /// margin. Returns NaN for empty cells.
  double cell_mean(Metric metric, int angle_bucket, int speaker_count) const;
  double overall(Metric metric) const { return cell_mean(metric, -1, -1); }

  std::string to_tsv() const;
  std::string to_jsonl() const;
};

using SeparateFn = std::function<WaveBuffer(const ManifestEntry&, const WaveBuffer& mix)>;

/// Run a separation system over every manifest scene (parallel over scenes)
/// and score Si-SNR/SDR against the clean reference-channel target.
EvalReport evaluate_system(const std::string& name, const RunConfig& cfg,
                           const std::vector<ManifestEntry>& entries, const std::string& dir,
                           const SeparateFn& separate);

/// Neural or classic-with-trained-estimator system from a checkpoint.
EvalReport evaluate_pipeline(Pipeline<float>& pipeline, const std::vector<ManifestEntry>& entries,
                             const std::string& dir);

/// Classic beamformer driven by oracle magnitude-ratio masks computed from
/// the stored scene components (Eq.-(2)-style chunk covariances).
EvalReport evaluate_oracle_classic(BeamKind kind, const RunConfig& cfg,
                                   const std::vector<ManifestEntry>& entries,
                                   const std::string& dir);

/// Identity system: output = reference channel of the mixture.
EvalReport evaluate_identity(const RunConfig& cfg, const std::vector<ManifestEntry>& entries,
                             const std::string& dir);

std::string join_path(const std::string& dir, const std::string& rel);

}  // namespace nbf
