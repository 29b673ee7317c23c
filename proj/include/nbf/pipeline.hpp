#pragma once

#include <memory>
#include <optional>

#include "nbf/checkpoint.hpp"
#include "nbf/config.hpp"
#include "nbf/covariance.hpp"
#include "nbf/crf_model.hpp"
#include "nbf/features.hpp"
#include "nbf/rnn_bf.hpp"
#include "nbf/scene.hpp"

namespace nbf {

template <class S>
Tensor<S> pack_spectrogram(const ComplexSpectrogram& spec) {
  Tensor<S> out({spec.frames, spec.bins, 2 * spec.channels});
  const int m = spec.channels;
  for (int t = 0; t < spec.frames; ++t)
    for (int f = 0; f < spec.bins; ++f)
      for (int c = 0; c < m; ++c) {
        const cdouble v = spec.at(t, f, c);
        out.v[size_t(((int64_t(t) * spec.bins + f) * 2 * m) + c)] = S(v.real());
        out.v[size_t(((int64_t(t) * spec.bins + f) * 2 * m) + m + c)] = S(v.imag());
      }
  return out;
}

template <class S>
Tensor<S> to_tensor(const RealMatrix& m) {
  Tensor<S> out({m.rows, m.cols});
  for (size_t i = 0; i < m.data.size(); ++i) out.v[i] = S(m.data[i]);
  return out;
}

/// The whole separation network: feature extraction (fixed), cRF estimator,
/// covariance construction, normalization, and the configured beamformer.
/// Classic kinds run the estimator as a masking front end and solve MVDR/GEV
/// in closed form outside the tape.
template <class S>
class Pipeline {
 public:
  using Var = typename Graph<S>::Var;

  explicit Pipeline(const RunConfig& cfg) : cfg_(cfg), stft_(cfg.stft_config()) {
    cfg_.validate();
    kind_ = beam_kind_from(cfg_.beam_kind);
    layout_ = FeatureLayout::against_reference(stft_.config().bins(), cfg_.mics(), cfg_.ref_channel);
    plan_ = IstftPlan<S>(cfg_.fft_size, cfg_.window_length, cfg_.hop, stft_.synthesis_window());

    Rng rng(cfg_.seed);
    est_cfg_ = EstimatorConfig{cfg_.blocks, cfg_.layers_per_block, cfg_.channels, cfg_.kernel,
                               cfg_.crf_half_width};
    estimator_ = std::make_unique<CrfEstimator<S>>(est_cfg_, layout_.dim(), stft_.config().bins(),
                                                   rng);
    params_.add_all(estimator_->params());

    if (neural_beamformer()) {
      RnnBfConfig bf;
      bf.kind = kind_;
      bf.norm = cfg_.normalization == "mask-norm" ? CovNorm::MaskNormalized
                                                  : CovNorm::LayerNormalized;
      bf.mics = cfg_.mics();
      bf.hidden = cfg_.rnn_hidden;
      bf.dnn_hidden = cfg_.dnn_hidden;
      beamformer_ = std::make_unique<RnnBeamformer<S>>(bf, rng);
      params_.add_all(beamformer_->params());
    }
  }

  const RunConfig& config() const { return cfg_; }
  const Stft& stft() const { return stft_; }
  const FeatureLayout& layout() const { return layout_; }
  BeamKind kind() const { return kind_; }
  bool neural_beamformer() const {
    return kind_ == BeamKind::RnnGev || kind_ == BeamKind::GrnnBf;
  }
  ParamSet<S>& params() { return params_; }
  RnnBeamformer<S>& beamformer() { return *beamformer_; }
  CrfEstimator<S>& estimator() { return *estimator_; }

  struct Built {
    Var features = -1;
    Var crf_speech = -1, crf_noise = -1;
    Var crm_speech = -1, crm_noise = -1;
    Var est_speech = -1, est_noise = -1;
    Var weights = -1;
    Var spec_out = -1;  // [T x F x 2]
    Var wave = -1;      // [(T-1)*hop + window]
  };

  RealMatrix features_for(const ComplexSpectrogram& mix, double doa_deg) const {
    const SteeringVector steering =
        steering_vector(cfg_.geometry(), doa_deg, stft_.config(), cfg_.sample_rate);
    return extract_features(mix, layout_, steering, cfg_.ref_channel);
  }

  /// Build the differentiable portion of the pipeline on the tape.
  /// crf_mask_only selects the estimator-as-separator path used when the
  /// beamformer has no trainable parameters (classic kinds).
  Built build(Graph<S>& g, const ComplexSpectrogram& mix, const RealMatrix& features,
              bool crf_mask_only) {
    const int F = stft_.config().bins();
    const int M = cfg_.mics();
    NBF_REQUIRE(mix.channels == M, "pipeline: channel count mismatch");

    Built out;
    const Var y = g.constant(pack_spectrogram<S>(mix));
    out.features = g.constant(to_tensor<S>(features));
    auto crfs = estimator_->forward(g, out.features);
    out.crf_speech = crfs.speech;
    out.crf_noise = crfs.noise;
    out.crm_speech = crfs.crm_speech;
    out.crm_noise = crfs.crm_noise;
    out.est_speech = g.apply_crf(crfs.speech, y, F, M, est_cfg_.crf_half_width);

    if (crf_mask_only || !neural_beamformer()) {
      const int64_t r = cfg_.ref_channel;
      out.spec_out = g.gather_last(out.est_speech, {r, M + r});
    } else {
      out.est_noise = g.apply_crf(crfs.noise, y, F, M, est_cfg_.crf_half_width);
      Var cov_s = g.outer_covariance(out.est_speech, M);
      Var cov_n = g.outer_covariance(out.est_noise, M);
      cov_s = beamformer_->normalize(g, cov_s, crfs.crm_speech, true, F);
      cov_n = beamformer_->normalize(g, cov_n, crfs.crm_noise, false, F);
      out.weights = beamformer_->weights(g, cov_s, cov_n);
      out.spec_out = g.beamform(out.weights, y, M);
    }
    out.wave = g.istft(out.spec_out, plan_);
    return out;
  }

  /// Training objective for a chunk: negative Si-SNR of the synthesized
  /// wave against the clean reference-channel target.
  Var loss(Graph<S>& g, const Built& built, const WaveBuffer& reference) {
    const int64_t n = g.value(built.wave).numel();
    NBF_REQUIRE(reference.length >= n, "pipeline: reference shorter than synthesis");
    Tensor<S> ref({n});
    auto ch = reference.channel(cfg_.ref_channel);
    for (int64_t i = 0; i < n; ++i) ref.v[size_t(i)] = S(ch[size_t(i)]);
    return g.si_snr_loss(built.wave, g.constant(std::move(ref)));
  }

  /// Masks for the classic solvers from the estimator's cRM center units:
  /// |cRM|^2 clipped to [0, 1].
  static RealMatrix crm_mask(const Graph<S>& g, Var crm, int bins) {
    const Tensor<S>& t = g.value(crm);
    const int64_t rows = t.numel() / (2 * bins);
    RealMatrix out(rows, bins);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t f = 0; f < bins; ++f) {
        const double re = double(t.v[size_t((r * bins + f) * 2)]);
        const double im = double(t.v[size_t((r * bins + f) * 2 + 1)]);
        out.at(r, f) = std::min(1.0, re * re + im * im);
      }
    return out;
  }

  /// End-to-end separation of a mixture given the target DOA. Neural kinds
  /// run the tape forward; classic kinds use estimator masks and the
  /// closed-form solver.
  WaveBuffer separate(const WaveBuffer& mix, double doa_deg) {
    NBF_REQUIRE(mix.channels == cfg_.mics(), "separate: channel count mismatch");
    const ComplexSpectrogram spec = stft_.forward(mix);
    const RealMatrix features = features_for(spec, doa_deg);

    Graph<S> g;
    Built built = build(g, spec, features, /*crf_mask_only=*/!neural_beamformer());

    if (neural_beamformer()) {
      const Tensor<S>& wave = g.value(built.wave);
      WaveBuffer out(1, wave.numel(), mix.sample_rate);
      auto ch = out.channel(0);
      for (int64_t i = 0; i < wave.numel(); ++i) ch[size_t(i)] = double(wave.v[size_t(i)]);
      return out;
    }

    const RealMatrix mask_s = crm_mask(g, built.crm_speech, spec.bins);
    const RealMatrix mask_n = crm_mask(g, built.crm_noise, spec.bins);
    const ChunkCovariance phi_s = chunk_covariance(spec, mask_s);
    const ChunkCovariance phi_n = chunk_covariance(spec, mask_n);
    const BeamWeights w = kind_ == BeamKind::Mvdr
                              ? mvdr_weights(phi_s, phi_n, cfg_.diagonal_loading)
                              : gev_weights(phi_s, phi_n, cfg_.diagonal_loading);
    return stft_.inverse(apply_beamformer(w, spec), mix.sample_rate);
  }

  void save_checkpoint(const std::string& path, const std::string& config_blob) {
    Checkpoint ck;
    ck.add_params(params_);
    ck.config_text = config_blob;
    ck.feature_layout = layout_.describe();
    ck.save(path);
  }

  void load_checkpoint(const Checkpoint& ck) {
    NBF_REQUIRE(ck.feature_layout == layout_.describe(),
                "checkpoint: feature layout mismatch\n  checkpoint: " + ck.feature_layout +
                    "\n  config:     " + layout_.describe());
    ck.load_params(params_);
  }

 private:
  RunConfig cfg_;
  Stft stft_;
  BeamKind kind_;
  FeatureLayout layout_;
  IstftPlan<S> plan_;
  EstimatorConfig est_cfg_;
  std::unique_ptr<CrfEstimator<S>> estimator_;
  std::unique_ptr<RnnBeamformer<S>> beamformer_;
  ParamSet<S> params_;
};

}  // namespace nbf
