#pragma once

#include "nbf/graph.hpp"
#include "nbf/init.hpp"

namespace nbf {

struct EstimatorConfig {
  int blocks = 2;
  int layers_per_block = 4;
  int channels = 64;
  int kernel = 3;
  int crf_half_width = 1;

  int tap_count() const {
    const int k = 2 * crf_half_width + 1;
    return k * k;
  }
  void validate() const {
    NBF_REQUIRE(blocks >= 1 && layers_per_block >= 1 && channels >= 1, "estimator: bad sizes");
    NBF_REQUIRE(kernel >= 1 && kernel % 2 == 1, "estimator: kernel must be odd");
    NBF_REQUIRE(crf_half_width >= 0, "estimator: bad cRF half width");
  }
};

/// Stacked dilated Conv-1D trunk with residual connections mapping the
/// feature rows to tanh-bounded speech and noise complex ratio filters.
/// Head layout per frame: [head][bin][re taps | im taps].
template <class S>
class CrfEstimator {
 public:
  using Var = typename Graph<S>::Var;

  CrfEstimator(const EstimatorConfig& cfg, int64_t feature_dim, int bins, Rng& rng)
      : cfg_(cfg), feature_dim_(feature_dim), bins_(bins) {
    cfg_.validate();
    const int64_t c = cfg_.channels;
    const int64_t head = head_dim();

    in_w_ = Parameter<S>("estimator.in.w", {c, feature_dim});
    in_b_ = Parameter<S>("estimator.in.b", {c});
    init::uniform_fanin(in_w_, feature_dim, rng);
    init::uniform_fanin(in_b_, feature_dim, rng);

    for (int b = 0; b < cfg_.blocks; ++b) {
      for (int l = 0; l < cfg_.layers_per_block; ++l) {
        Layer layer;
        const std::string base =
            "estimator.b" + std::to_string(b) + ".l" + std::to_string(l) + ".";
        layer.conv_w = Parameter<S>(base + "conv.w", {c, c, cfg_.kernel});
        layer.conv_b = Parameter<S>(base + "conv.b", {c});
        layer.alpha = Parameter<S>(base + "prelu.alpha", {c});
        layer.gamma = Parameter<S>(base + "ln.gamma", {c});
        layer.beta = Parameter<S>(base + "ln.beta", {c});
        init::uniform_fanin(layer.conv_w, c * cfg_.kernel, rng);
        init::uniform_fanin(layer.conv_b, c * cfg_.kernel, rng);
        init::constant(layer.alpha, 0.25);
        init::constant(layer.gamma, 1.0);
        init::constant(layer.beta, 0.0);
        layer.dilation = 1 << l;
        layers_.push_back(std::move(layer));
      }
    }

    head_w_ = Parameter<S>("estimator.head.w", {head, c});
    head_b_ = Parameter<S>("estimator.head.b", {head});
    init::uniform_fanin(head_w_, c, rng);
    init::uniform_fanin(head_b_, c, rng);

    params_.add(&in_w_);
    params_.add(&in_b_);
    for (auto& l : layers_) {
      params_.add(&l.conv_w);
      params_.add(&l.conv_b);
      params_.add(&l.alpha);
      params_.add(&l.gamma);
      params_.add(&l.beta);
    }
    params_.add(&head_w_);
    params_.add(&head_b_);
  }

  const EstimatorConfig& config() const { return cfg_; }
  int64_t feature_dim() const { return feature_dim_; }
  int bins() const { return bins_; }
  /// two heads (speech, noise), each [bins x (re taps | im taps)]
  int64_t head_dim() const { return 2 * int64_t(bins_) * 2 * cfg_.tap_count(); }

  ParamSet<S>& params() { return params_; }

  struct CrfPairVars {
    Var speech, noise;      // [T x F x 2*taps]
    Var crm_speech, crm_noise;  // center units, [T x F x 2]
  };

  /// features [T x D] -> cRF pair. Throws when D mismatches the layout the
  /// model was built for.
  CrfPairVars forward(Graph<S>& g, Var features) {
    NBF_REQUIRE(g.value(features).last_dim() == feature_dim_,
                "estimator: feature dimensionality does not match the checkpoint descriptor");
    const int64_t taps = cfg_.tap_count();

    Var x = g.affine(features, g.param(in_w_), g.param(in_b_));
    for (auto& l : layers_) {
      Var y = g.conv1d(x, g.param(l.conv_w), g.param(l.conv_b), l.dilation);
      y = g.prelu(y, g.param(l.alpha));
      y = g.layer_norm(y, g.param(l.gamma), g.param(l.beta));
      x = g.add(x, y);
    }
    Var head = g.tanh_op(g.affine(x, g.param(head_w_), g.param(head_b_)));

    const int64_t per_head = bins_ * 2 * taps;
    const int64_t t_len = g.value(head).shape[0];
    CrfPairVars out;
    out.speech = g.reshape(g.slice_last(head, 0, per_head), {t_len, bins_, 2 * taps});
    out.noise = g.reshape(g.slice_last(head, per_head, per_head), {t_len, bins_, 2 * taps});
    const int64_t center = (int64_t(cfg_.crf_half_width) * (2 * cfg_.crf_half_width + 1)) +
                           cfg_.crf_half_width;
    out.crm_speech = g.gather_last(out.speech, {center, taps + center});
    out.crm_noise = g.gather_last(out.noise, {center, taps + center});
    return out;
  }

 private:
  struct Layer {
    Parameter<S> conv_w, conv_b, alpha, gamma, beta;
    int dilation = 1;
  };

  EstimatorConfig cfg_;
  int64_t feature_dim_;
  int bins_;
  Parameter<S> in_w_, in_b_, head_w_, head_b_;
  std::vector<Layer> layers_;
  ParamSet<S> params_;
};

}  // namespace nbf
