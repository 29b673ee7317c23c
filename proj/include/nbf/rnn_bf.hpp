#pragma once

#include "nbf/classic_bf.hpp"
#include "nbf/graph.hpp"
#include "nbf/init.hpp"

namespace nbf {

struct RnnBfConfig {
  BeamKind kind = BeamKind::GrnnBf;  // RnnGev or GrnnBf
  CovNorm norm = CovNorm::LayerNormalized;
  int mics = 4;
  int hidden = 64;      // GRU hidden size per layer (paper scale 500)
  int dnn_hidden = 64;  // PReLU DNN layer width (paper scale 500)

  void validate() const {
    NBF_REQUIRE(kind == BeamKind::RnnGev || kind == BeamKind::GrnnBf,
                "rnn_bf: kind must be rnn-gev or grnn-bf");
    NBF_REQUIRE(norm == CovNorm::MaskNormalized || norm == CovNorm::LayerNormalized,
                "rnn_bf: normalization must be mask or layer");
    NBF_REQUIRE(mics >= 2 && hidden >= 1 && dnn_hidden >= 1, "rnn_bf: bad sizes");
  }
};

namespace detail {

/// 2-layer GRU stack running along time, frequencies as the batch.
template <class S>
struct GruStack {
  Parameter<S> w_ih1, w_hh1, b1, w_ih2, w_hh2, b2;

  GruStack() = default;
  GruStack(const std::string& base, int64_t input, int64_t hidden, Rng& rng) {
    w_ih1 = Parameter<S>(base + ".gru1.w_ih", {3 * hidden, input});
    w_hh1 = Parameter<S>(base + ".gru1.w_hh", {3 * hidden, hidden});
    b1 = Parameter<S>(base + ".gru1.b", {3 * hidden});
    w_ih2 = Parameter<S>(base + ".gru2.w_ih", {3 * hidden, hidden});
    w_hh2 = Parameter<S>(base + ".gru2.w_hh", {3 * hidden, hidden});
    b2 = Parameter<S>(base + ".gru2.b", {3 * hidden});
    init::uniform_fanin(w_ih1, input, rng);
    init::orthogonal_blocks(w_hh1, hidden, rng);
    init::constant(b1, 0.0);
    init::uniform_fanin(w_ih2, hidden, rng);
    init::orthogonal_blocks(w_hh2, hidden, rng);
    init::constant(b2, 0.0);
  }

  void reg(ParamSet<S>& set) {
    set.add(&w_ih1);
    set.add(&w_hh1);
    set.add(&b1);
    set.add(&w_ih2);
    set.add(&w_hh2);
    set.add(&b2);
  }

  typename Graph<S>::Var forward(Graph<S>& g, typename Graph<S>::Var x) {
    auto h1 = g.gru(x, g.param(w_ih1), g.param(w_hh1), g.param(b1));
    return g.gru(h1, g.param(w_ih2), g.param(w_hh2), g.param(b2));
  }
};

}  // namespace detail

/// Frame-level beamforming weights from normalized speech/noise covariance
/// sequences. Owns the covariance layer-norm parameters (layer-norm mode)
/// and either the two-branch RNN-GEV or the unified GRNN-BF network.
template <class S>
class RnnBeamformer {
 public:
  using Var = typename Graph<S>::Var;

  RnnBeamformer(const RnnBfConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const int64_t m = cfg_.mics;
    const int64_t cov_dim = 2 * m * m;

    if (cfg_.norm == CovNorm::LayerNormalized) {
      ln_gamma_s_ = Parameter<S>("covnorm.speech.gamma", {cov_dim});
      ln_beta_s_ = Parameter<S>("covnorm.speech.beta", {cov_dim});
      ln_gamma_n_ = Parameter<S>("covnorm.noise.gamma", {cov_dim});
      ln_beta_n_ = Parameter<S>("covnorm.noise.beta", {cov_dim});
      init::constant(ln_gamma_s_, 1.0);
      init::constant(ln_beta_s_, 0.0);
      init::constant(ln_gamma_n_, 1.0);
      init::constant(ln_beta_n_, 0.0);
      params_.add(&ln_gamma_s_);
      params_.add(&ln_beta_s_);
      params_.add(&ln_gamma_n_);
      params_.add(&ln_beta_n_);
    }

    if (cfg_.kind == BeamKind::RnnGev) {
      rnn_noise_ = detail::GruStack<S>("rnngev.noise", cov_dim, cfg_.hidden, rng);
      rnn_speech_ = detail::GruStack<S>("rnngev.speech", cov_dim, cfg_.hidden, rng);
      proj_n_w_ = Parameter<S>("rnngev.noise.proj.w", {cov_dim, cfg_.hidden});
      proj_n_b_ = Parameter<S>("rnngev.noise.proj.b", {cov_dim});
      proj_s_w_ = Parameter<S>("rnngev.speech.proj.w", {cov_dim, cfg_.hidden});
      proj_s_b_ = Parameter<S>("rnngev.speech.proj.b", {cov_dim});
      init::uniform_fanin(proj_n_w_, cfg_.hidden, rng);
      init::uniform_fanin(proj_n_b_, cfg_.hidden, rng);
      init::uniform_fanin(proj_s_w_, cfg_.hidden, rng);
      init::uniform_fanin(proj_s_b_, cfg_.hidden, rng);
      rnn_noise_.reg(params_);
      proj_reg();
      rnn_speech_.reg(params_);
      dnn_in_dim_ = cov_dim;
    } else {
      rnn_joint_ = detail::GruStack<S>("grnnbf", 2 * cov_dim, cfg_.hidden, rng);
      rnn_joint_.reg(params_);
      dnn_in_dim_ = cfg_.hidden;
    }

    dnn1_w_ = Parameter<S>("dnn.hidden.w", {cfg_.dnn_hidden, dnn_in_dim_});
    dnn1_b_ = Parameter<S>("dnn.hidden.b", {cfg_.dnn_hidden});
    dnn_alpha_ = Parameter<S>("dnn.hidden.prelu", {cfg_.dnn_hidden});
    dnn2_w_ = Parameter<S>("dnn.out.w", {2 * m, cfg_.dnn_hidden});
    dnn2_b_ = Parameter<S>("dnn.out.b", {2 * m});
    init::uniform_fanin(dnn1_w_, dnn_in_dim_, rng);
    init::uniform_fanin(dnn1_b_, dnn_in_dim_, rng);
    init::constant(dnn_alpha_, 0.25);
    init::uniform_fanin(dnn2_w_, cfg_.dnn_hidden, rng);
    init::uniform_fanin(dnn2_b_, cfg_.dnn_hidden, rng);
    params_.add(&dnn1_w_);
    params_.add(&dnn1_b_);
    params_.add(&dnn_alpha_);
    params_.add(&dnn2_w_);
    params_.add(&dnn2_b_);
  }

  const RnnBfConfig& config() const { return cfg_; }
  ParamSet<S>& params() { return params_; }

  /// Normalize a raw covariance sequence [T x F x 2M^2] according to the
  /// configured mode; crm is the matching cRF center unit [T x F x 2].
  Var normalize(Graph<S>& g, Var cov_raw, Var crm, bool speech_branch, int64_t bins) {
    if (cfg_.norm == CovNorm::MaskNormalized) return g.mask_normalize(cov_raw, crm, bins);
    Parameter<S>& gamma = speech_branch ? ln_gamma_s_ : ln_gamma_n_;
    Parameter<S>& beta = speech_branch ? ln_beta_s_ : ln_beta_n_;
    return g.layer_norm(cov_raw, g.param(gamma), g.param(beta));
  }

  /// Normalized covariances -> frame-level weights [T x F x 2M].
  /// RNN-GEV: two GRU stacks emit surrogate inverse-noise and speech
  /// matrices whose complex product feeds the DNN. GRNN-BF: one GRU stack
  /// over the [noise | speech] concatenation feeds the DNN directly.
  Var weights(Graph<S>& g, Var cov_speech, Var cov_noise) {
    const int64_t m = cfg_.mics;
    Var dnn_in;
    if (cfg_.kind == BeamKind::RnnGev) {
      Var phi_n_inv = g.affine(rnn_noise_.forward(g, cov_noise), g.param(proj_n_w_), g.param(proj_n_b_));
      Var phi_s = g.affine(rnn_speech_.forward(g, cov_speech), g.param(proj_s_w_), g.param(proj_s_b_));
      dnn_in = g.complex_matmul(phi_n_inv, phi_s, m);
    } else {
      Var joint = g.concat_last(cov_noise, cov_speech);  // noise first
      dnn_in = rnn_joint_.forward(g, joint);
    }
    Var hidden = g.prelu(g.affine(dnn_in, g.param(dnn1_w_), g.param(dnn1_b_)), g.param(dnn_alpha_));
    return g.affine(hidden, g.param(dnn2_w_), g.param(dnn2_b_));
  }

 private:
  void proj_reg() {
    params_.add(&proj_n_w_);
    params_.add(&proj_n_b_);
    params_.add(&proj_s_w_);
    params_.add(&proj_s_b_);
  }

  RnnBfConfig cfg_;
  Parameter<S> ln_gamma_s_, ln_beta_s_, ln_gamma_n_, ln_beta_n_;
  detail::GruStack<S> rnn_noise_, rnn_speech_, rnn_joint_;
  Parameter<S> proj_n_w_, proj_n_b_, proj_s_w_, proj_s_b_;
  Parameter<S> dnn1_w_, dnn1_b_, dnn_alpha_, dnn2_w_, dnn2_b_;
  int64_t dnn_in_dim_ = 0;
  ParamSet<S> params_;
};

}  // namespace nbf
