// cRF estimation and application: identity/zero filters, bilinearity,
// channel sharing, and the estimator model's output contract.

#include "doctest.h"
#include "nbf/crf_model.hpp"
#include "nbf/ref_kernels.hpp"
#include "oracles.hpp"

using namespace nbf;
using namespace nbf::test;
using G = Graph<double>;

namespace {

// packed [re | im] tap tensor from a complex tap array
Tensor<double> pack_crf(const std::vector<cdouble>& crf, int t, int f, int k2) {
  Tensor<double> out({t, f, 2 * k2});
  for (int64_t i = 0; i < int64_t(t) * f; ++i)
    for (int j = 0; j < k2; ++j) {
      out.v[size_t(i * 2 * k2 + j)] = crf[size_t(i * k2 + j)].real();
      out.v[size_t(i * 2 * k2 + k2 + j)] = crf[size_t(i * k2 + j)].imag();
    }
  return out;
}

Tensor<double> pack_y(const std::vector<cdouble>& y, int t, int f, int m) {
  Tensor<double> out({t, f, 2 * m});
  for (int64_t i = 0; i < int64_t(t) * f; ++i)
    for (int c = 0; c < m; ++c) {
      out.v[size_t(i * 2 * m + c)] = y[size_t(i * m + c)].real();
      out.v[size_t(i * 2 * m + m + c)] = y[size_t(i * m + c)].imag();
    }
  return out;
}

std::vector<cdouble> random_complex(size_t n, Rng& rng) {
  std::vector<cdouble> v(n);
  for (auto& x : v) x = cdouble(uniform(rng), uniform(rng));
  return v;
}

}  // namespace

TEST_CASE("identity filter reproduces the spectrogram exactly for any T, F, M") {
  Rng rng(71);
  for (auto [t, f, m] : {std::tuple{1, 1, 1}, {3, 5, 2}, {6, 4, 4}}) {
    const int k2 = 9;
    std::vector<cdouble> crf(size_t(t) * size_t(f) * k2, cdouble(0, 0));
    for (int64_t i = 0; i < int64_t(t) * f; ++i) crf[size_t(i * k2 + 4)] = 1.0;  // center tap
    const auto y = random_complex(size_t(t) * size_t(f) * size_t(m), rng);

    G g;
    auto out = g.apply_crf(g.constant(pack_crf(crf, t, f, k2)), g.constant(pack_y(y, t, f, m)), f,
                           m, 1);
    const Tensor<double> expected = pack_y(y, t, f, m);
    for (int64_t i = 0; i < expected.numel(); ++i)
      CHECK(g.value(out).v[size_t(i)] == doctest::Approx(expected.v[size_t(i)]).epsilon(1e-14));
  }
}

TEST_CASE("zero filter silences the output") {
  Rng rng(72);
  const int t = 4, f = 3, m = 2, k2 = 9;
  const auto y = random_complex(size_t(t) * f * m, rng);
  G g;
  Tensor<double> zeros({t, f, 2 * k2});
  auto out = g.apply_crf(g.constant(zeros), g.constant(pack_y(y, t, f, m)), f, m, 1);
  for (double v : g.value(out).v) CHECK(v == 0.0);
}

TEST_CASE("apply_crf matches the brute-force neighborhood sum to 1e-12") {
  Rng rng(73);
  const int t = 2, f = 3, m = 3, half = 1, k2 = 9;
  const auto crf = random_complex(size_t(t) * f * k2, rng);
  const auto y = random_complex(size_t(t) * f * m, rng);
  const auto expected = ref::apply_crf(crf, y, t, f, m, half);

  G g;
  auto out =
      g.apply_crf(g.constant(pack_crf(crf, t, f, k2)), g.constant(pack_y(y, t, f, m)), f, m, half);
  for (int64_t i = 0; i < int64_t(t) * f; ++i)
    for (int c = 0; c < m; ++c) {
      CHECK(std::abs(g.value(out).v[size_t(i * 2 * m + c)] - expected[size_t(i * m + c)].real()) <
            1e-12);
      CHECK(std::abs(g.value(out).v[size_t(i * 2 * m + m + c)] -
                     expected[size_t(i * m + c)].imag()) < 1e-12);
    }
}

TEST_CASE("apply_crf is bilinear in the filter and the spectrogram") {
  Rng rng(74);
  const int t = 3, f = 4, m = 2, k2 = 9;
  const auto crf_a = pack_crf(random_complex(size_t(t) * f * k2, rng), t, f, k2);
  const auto crf_b = pack_crf(random_complex(size_t(t) * f * k2, rng), t, f, k2);
  const auto y_a = pack_y(random_complex(size_t(t) * f * m, rng), t, f, m);
  const auto y_b = pack_y(random_complex(size_t(t) * f * m, rng), t, f, m);

  auto run = [&](const Tensor<double>& crf, const Tensor<double>& y) {
    G g;
    return g.value(g.apply_crf(g.constant(crf), g.constant(y), f, m, 1)).v;
  };

  {  // linear in the cRF for fixed Y
    Tensor<double> mix = crf_a;
    for (int64_t i = 0; i < mix.numel(); ++i)
      mix.v[size_t(i)] = 2.0 * crf_a.v[size_t(i)] - 0.5 * crf_b.v[size_t(i)];
    const auto lhs = run(mix, y_a);
    const auto ra = run(crf_a, y_a), rb = run(crf_b, y_a);
    for (size_t i = 0; i < lhs.size(); ++i)
      CHECK(lhs[i] == doctest::Approx(2.0 * ra[i] - 0.5 * rb[i]).epsilon(1e-12));
  }
  {  // linear in Y for a fixed cRF
    Tensor<double> mix = y_a;
    for (int64_t i = 0; i < mix.numel(); ++i)
      mix.v[size_t(i)] = 1.5 * y_a.v[size_t(i)] + 0.25 * y_b.v[size_t(i)];
    const auto lhs = run(crf_a, mix);
    const auto ra = run(crf_a, y_a), rb = run(crf_a, y_b);
    for (size_t i = 0; i < lhs.size(); ++i)
      CHECK(lhs[i] == doctest::Approx(1.5 * ra[i] + 0.25 * rb[i]).epsilon(1e-12));
  }
}

TEST_CASE("one shared filter treats channels symmetrically") {
  Rng rng(75);
  const int t = 3, f = 3, m = 3, k2 = 9;
  const auto crf = random_complex(size_t(t) * f * k2, rng);
  auto y = random_complex(size_t(t) * f * m, rng);
  const auto base = ref::apply_crf(crf, y, t, f, m, 1);

  // permute channels 0 <-> 2
  auto y_perm = y;
  for (int64_t i = 0; i < int64_t(t) * f; ++i) std::swap(y_perm[size_t(i * m)], y_perm[size_t(i * m + 2)]);
  const auto permuted = ref::apply_crf(crf, y_perm, t, f, m, 1);
  for (int64_t i = 0; i < int64_t(t) * f; ++i) {
    CHECK(std::abs(permuted[size_t(i * m)] - base[size_t(i * m + 2)]) < 1e-14);
    CHECK(std::abs(permuted[size_t(i * m + 2)] - base[size_t(i * m)]) < 1e-14);
  }
}

TEST_CASE("estimator emits bounded 3x3 cRFs with the right shapes") {
  Rng rng(76);
  EstimatorConfig cfg;
  cfg.blocks = 1;
  cfg.layers_per_block = 2;
  cfg.channels = 8;
  const int bins = 9, t = 6;
  const int64_t feat_dim = 30;
  CrfEstimator<double> est(cfg, feat_dim, bins, rng);

  G g;
  auto crfs = est.forward(g, g.constant(random_tensor<double>({t, feat_dim}, rng)));
  CHECK(g.value(crfs.speech).shape == std::vector<int64_t>{t, bins, 18});
  CHECK(g.value(crfs.noise).shape == std::vector<int64_t>{t, bins, 18});
  CHECK(g.value(crfs.crm_speech).shape == std::vector<int64_t>{t, bins, 2});
  for (double v : g.value(crfs.speech).v) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
  // center-unit accessor picks taps 4 (re) and 13 (im)
  for (int64_t i = 0; i < int64_t(t) * bins; ++i) {
    CHECK(g.value(crfs.crm_speech).v[size_t(i * 2)] == g.value(crfs.speech).v[size_t(i * 18 + 4)]);
    CHECK(g.value(crfs.crm_speech).v[size_t(i * 2 + 1)] ==
          g.value(crfs.speech).v[size_t(i * 18 + 13)]);
  }

  // feature width is validated against the construction-time layout
  auto bad = g.constant(random_tensor<double>({t, feat_dim + 1}, rng));
  CHECK_THROWS_WITH_AS((void)est.forward(g, bad), doctest::Contains("dimensionality"), Error);
}

TEST_CASE("estimator gradients reach the first conv layer") {
  Rng rng(77);
  EstimatorConfig cfg;
  cfg.blocks = 1;
  cfg.layers_per_block = 2;
  cfg.channels = 6;
  const int bins = 5, t = 7;
  const int64_t feat_dim = 12;
  CrfEstimator<double> est(cfg, feat_dim, bins, rng);
  const Tensor<double> feats = random_tensor<double>({t, feat_dim}, rng);

  auto build = [&](G& g) {
    auto crfs = est.forward(g, g.constant(feats));
    return probe(g, crfs.speech, 78);
  };
  Parameter<double>* in_w = est.params().find("estimator.in.w");
  Parameter<double>* conv0 = est.params().find("estimator.b0.l0.conv.w");
  REQUIRE(in_w != nullptr);
  REQUIRE(conv0 != nullptr);
  CHECK(max_grad_rel_err(build, {in_w, conv0}, rng, 8) < 1e-4);

  double grad_norm = 0;
  for (double gv : conv0->grad) grad_norm += gv * gv;
  CHECK(grad_norm > 0.0);
}
