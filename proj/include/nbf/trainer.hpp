#pragma once

#include <ostream>

#include "nbf/manifest.hpp"
#include "nbf/optimizer.hpp"
#include "nbf/pipeline.hpp"

namespace nbf {

struct TrainOptions {
  std::string manifest_path;
  std::string out_checkpoint;
  int64_t steps = -1;           // -1: take from config
  bool train_crf_only = false;  // train the estimator as a masking separator
  std::string resume_checkpoint;
};

struct TrainResult {
  int64_t steps_run = 0;
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

/// Chunk-wise Si-SNR training over a scene manifest: Adam, global gradient
/// clipping, periodic checkpoints carrying optimizer and RNG state so a
/// resumed run continues the exact trajectory.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, Pipeline<float>& pipeline);

  TrainResult run(const TrainOptions& opts, std::ostream& log);

 private:
  void save_checkpoint(const std::string& path, int64_t step, const Rng& rng,
                       const std::vector<double>& losses);
  int64_t restore(const std::string& path, Rng& rng, std::vector<double>& losses);

  RunConfig cfg_;
  Pipeline<float>& pipeline_;
  Adam<float> adam_;
};

}  // namespace nbf
