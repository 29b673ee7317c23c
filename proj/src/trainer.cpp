#include "nbf/trainer.hpp"

#include <cmath>
#include <sstream>

#include "nbf/wav_io.hpp"

namespace nbf {

namespace {

std::string join_path(const std::string& dir, const std::string& rel) {
  if (rel.empty() || rel.front() == '/') return rel;
  return dir + "/" + rel;
}

WaveBuffer crop(const WaveBuffer& w, int64_t offset, int64_t length) {
  NBF_REQUIRE(offset >= 0 && offset + length <= w.length, "crop: out of range");
  WaveBuffer out(w.channels, length, w.sample_rate);
  for (int c = 0; c < w.channels; ++c)
    for (int64_t n = 0; n < length; ++n) out.at(c, n) = w.at(c, offset + n);
  return out;
}

}  // namespace

Trainer::Trainer(const RunConfig& cfg, Pipeline<float>& pipeline)
    : cfg_(cfg), pipeline_(pipeline) {
  AdamConfig ac;
  ac.lr = cfg_.lr;
  adam_.config() = ac;
}

void Trainer::save_checkpoint(const std::string& path, int64_t step, const Rng& rng,
                              const std::vector<double>& losses) {
  Checkpoint ck;
  ck.add_params(pipeline_.params());
  for (const auto& [name, st] : adam_.state()) {
    const Parameter<float>* p = pipeline_.params().find(name);
    if (!p) continue;
    ck.add_tensor("__opt.m." + name, p->value.shape, st.m);
    ck.add_tensor("__opt.v." + name, p->value.shape, st.v);
  }

  std::ostringstream state;
  state << cfg_.serialize();
  state << "\n[trainer_state]\n";
  state << "step = " << step << "\n";
  state << "adam_step = " << adam_.step_count() << "\n";
  state << "rng = " << rng << "\n";
  state << "loss_history =";
  state.precision(17);
  for (double l : losses) state << " " << l;
  state << "\n";

  Checkpoint full = std::move(ck);
  full.config_text = state.str();
  full.feature_layout = pipeline_.layout().describe();
  full.save(path);
}

int64_t Trainer::restore(const std::string& path, Rng& rng, std::vector<double>& losses) {
  const Checkpoint ck = Checkpoint::load(path);
  pipeline_.load_checkpoint(ck);

  for (auto* p : pipeline_.params().items) {
    const auto* m = ck.find("__opt.m." + p->name);
    const auto* v = ck.find("__opt.v." + p->name);
    if (!m || !v) continue;
    auto& st = adam_.state()[p->name];
    st.m.assign(m->data.begin(), m->data.end());
    st.v.assign(v->data.begin(), v->data.end());
  }

  const auto sections = parse_ini(ck.config_text);
  const auto it = sections.find("trainer_state");
  NBF_REQUIRE(it != sections.end(), "resume: checkpoint carries no trainer state");
  int64_t step = 0;
  for (const auto& [key, value] : it->second) {
    if (key == "step") step = std::stoll(value);
    if (key == "adam_step") adam_.set_step_count(std::stoll(value));
    if (key == "rng") {
      std::istringstream is(value);
      is >> rng;
      NBF_REQUIRE(!is.fail(), "resume: malformed rng state");
    }
    if (key == "loss_history") {
      std::istringstream is(value);
      double l;
      losses.clear();
      while (is >> l) losses.push_back(l);
    }
  }
  return step;
}

TrainResult Trainer::run(const TrainOptions& opts, std::ostream& log) {
  cfg_.validate();
  if (!pipeline_.neural_beamformer() && !opts.train_crf_only)
    throw ConfigError(std::string(beam_kind_name(pipeline_.kind())) +
                      ": no trainable beamformer parameters unless cRF training enabled "
                      "(pass --train-crf)");

  const auto entries = read_manifest(opts.manifest_path);
  NBF_REQUIRE(!entries.empty(), "train: empty manifest");
  const std::string dir = manifest_dir(opts.manifest_path);

  const int64_t total_steps = opts.steps >= 0 ? opts.steps : cfg_.steps;
  const int64_t chunk = cfg_.chunk_samples();
  const bool crf_only = opts.train_crf_only || !pipeline_.neural_beamformer();

  Rng rng(cfg_.seed ^ 0x5DEECE66DULL);
  std::vector<double> losses;
  int64_t start_step = 0;
  if (!opts.resume_checkpoint.empty()) {
    start_step = restore(opts.resume_checkpoint, rng, losses);
    log << "resumed from " << opts.resume_checkpoint << " at step " << start_step << "\n";
  }

  TrainResult result;
  bool checkpoint_written = false;
  for (int64_t step = start_step + 1; step <= total_steps; ++step) {
    pipeline_.params().zero_grads();
    double loss_sum = 0.0;

    for (int b = 0; b < cfg_.batch_size; ++b) {
      const ManifestEntry& entry = entries[size_t(rng() % entries.size())];
      const WaveBuffer mix_full = load_wav(join_path(dir, entry.mixture_wav));
      const WaveBuffer target_full = load_wav(join_path(dir, entry.target_wav));
      NBF_REQUIRE(mix_full.length >= chunk,
                  "train: scene " + std::to_string(entry.scene_id) + " shorter than one chunk");
      const int64_t max_off = mix_full.length - chunk;
      const int64_t offset = max_off > 0 ? int64_t(rng() % uint64_t(max_off + 1)) : 0;
      const WaveBuffer mix = crop(mix_full, offset, chunk);
      const WaveBuffer target = crop(target_full, offset, chunk);

      const ComplexSpectrogram spec = pipeline_.stft().forward(mix);
      const RealMatrix features = pipeline_.features_for(spec, entry.target_azimuth);

      Graph<float> g;
      auto built = pipeline_.build(g, spec, features, crf_only);
      auto loss = pipeline_.loss(g, built, target);
      loss_sum += double(g.value(loss).v[0]);
      g.backward(loss);
    }

    const double loss_mean = loss_sum / cfg_.batch_size;
    if (!std::isfinite(loss_mean)) {
      throw Error("train: non-finite loss at step " + std::to_string(step) +
                  (checkpoint_written || start_step > 0
                       ? "; last good checkpoint retained at " + opts.out_checkpoint
                       : "; no checkpoint written yet"));
    }
    if (cfg_.batch_size > 1) {
      const float inv = 1.0f / float(cfg_.batch_size);
      for (auto* p : pipeline_.params().items)
        for (float& gv : p->grad) gv *= inv;
    }
    clip_grad_norm(pipeline_.params(), cfg_.max_grad_norm);
    adam_.step(pipeline_.params());

    losses.push_back(loss_mean);
    result.final_loss = loss_mean;
    result.steps_run = step;
    log << "step " << step << " loss " << loss_mean << " si_snr " << -loss_mean << "\n";

    if (step % cfg_.checkpoint_every == 0 || step == total_steps) {
      save_checkpoint(opts.out_checkpoint, step, rng, losses);
      checkpoint_written = true;
    }
  }

  if (!checkpoint_written) {
    // steps == 0 (or resume already past the target): still emit a loadable artifact
    save_checkpoint(opts.out_checkpoint, start_step, rng, losses);
  }
  result.loss_history = std::move(losses);
  return result;
}

}  // namespace nbf
