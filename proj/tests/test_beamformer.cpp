// MVDR/GEV contracts against Eigen dense oracles, plus the Jacobi
// eigensolver itself.

#include "doctest.h"
#include "nbf/classic_bf.hpp"
#include "oracles.hpp"

using namespace nbf;
using namespace nbf::test;

namespace {

ChunkCovariance from_eigen(const std::vector<Eigen::MatrixXcd>& mats) {
  ChunkCovariance cov;
  cov.bins = int(mats.size());
  cov.mics = int(mats[0].rows());
  cov.data.resize(size_t(cov.bins) * size_t(cov.mics) * size_t(cov.mics));
  for (int f = 0; f < cov.bins; ++f)
    for (int i = 0; i < cov.mics; ++i)
      for (int j = 0; j < cov.mics; ++j) cov.at(f, i, j) = mats[size_t(f)](i, j);
  return cov;
}

}  // namespace

TEST_CASE("jacobi eigendecomposition matches Eigen on random Hermitian matrices") {
  Rng rng(61);
  for (int m : {2, 3, 4, 8, 15}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXcd a = random_hpsd(m, rng, 0.0);
      std::vector<cdouble> flat(size_t(m) * size_t(m));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) flat[size_t(i * m + j)] = a(i, j);
      const HermitianEig eig = hermitian_eig(flat.data(), m);

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> oracle(a);
      for (int k = 0; k < m; ++k)
        CHECK(rel_err(eig.eigenvalues[size_t(k)], oracle.eigenvalues()(k), 1e-9) < 1e-9);
      // residual ||A v - lambda v||
      for (int k = 0; k < m; ++k) {
        Eigen::VectorXcd v(m);
        for (int i = 0; i < m; ++i) v(i) = eig.vectors[size_t(i * m + k)];
        CHECK((a * v - eig.eigenvalues[size_t(k)] * v).norm() < 1e-9 * std::max(1.0, a.norm()));
      }
    }
  }
}

TEST_CASE("mvdr with identity noise and e1 steering returns e1") {
  const int m = 3;
  std::vector<Eigen::MatrixXcd> phi_s(1, Eigen::MatrixXcd::Zero(m, m));
  phi_s[0](0, 0) = 5.0;  // principal eigenvector is e1
  std::vector<Eigen::MatrixXcd> phi_n(1, Eigen::MatrixXcd::Identity(m, m));
  const BeamWeights w = mvdr_weights(from_eigen(phi_s), from_eigen(phi_n), 0.0);
  CHECK(std::abs(w.chunk_at(0, 0) - cdouble(1, 0)) < 1e-10);
  CHECK(std::abs(w.chunk_at(0, 1)) < 1e-10);
  CHECK(std::abs(w.chunk_at(0, 2)) < 1e-10);
}

TEST_CASE("mvdr satisfies the distortionless constraint and matches a solve oracle") {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + int(rng() % 4);
    const Eigen::MatrixXcd phi_n = random_hpsd(m, rng, 0.5);
    Eigen::VectorXcd steer(m);
    for (int i = 0; i < m; ++i) steer(i) = cdouble(uniform(rng), uniform(rng));
    steer.normalize();
    // apply the solver's phase convention so the comparison is exact
    for (int i = 0; i < m; ++i)
      if (std::abs(steer(i)) > 1e-12) {
        steer *= std::conj(steer(i)) / std::abs(steer(i));
        break;
      }

    std::vector<std::vector<cdouble>> steering(1, std::vector<cdouble>(size_t(m)));
    for (int i = 0; i < m; ++i) steering[0][size_t(i)] = steer(i);
    std::vector<Eigen::MatrixXcd> phi_n_v(1, phi_n);
    const double delta = 1e-5;
    const BeamWeights w = mvdr_weights_steered(steering, from_eigen(phi_n_v), delta);

    Eigen::VectorXcd wv(m);
    for (int i = 0; i < m; ++i) wv(i) = w.chunk_at(0, i);

    // distortionless: w^H v = 1
    CHECK(std::abs((wv.adjoint() * steer)(0) - cdouble(1, 0)) < 1e-6);

    // independent oracle: loaded = phi_n + delta tr/m I; x = loaded^-1 v
    Eigen::MatrixXcd loaded =
        phi_n + delta * (phi_n.trace().real() / m) * Eigen::MatrixXcd::Identity(m, m);
    Eigen::VectorXcd x = loaded.fullPivLu().solve(steer);
    Eigen::VectorXcd expected = x / (steer.adjoint() * x)(0);
    CHECK((wv - expected).norm() < 1e-8 * expected.norm());

    // noise-scale invariance
    std::vector<Eigen::MatrixXcd> scaled(1, 7.3 * phi_n);
    const BeamWeights w2 = mvdr_weights_steered(steering, from_eigen(scaled), delta);
    for (int i = 0; i < m; ++i) CHECK(std::abs(w2.chunk_at(0, i) - wv(i)) < 1e-8);
  }
}

TEST_CASE("mvdr pca steering path stays distortionless on random rank-1 speech covariances") {
  Rng rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + int(rng() % 3);
    Eigen::VectorXcd v(m);
    for (int i = 0; i < m; ++i) v(i) = cdouble(uniform(rng), uniform(rng));
    std::vector<Eigen::MatrixXcd> phi_s(1, (v * v.adjoint() * 4.0).eval());
    std::vector<Eigen::MatrixXcd> phi_n(1, random_hpsd(m, rng, 0.5));
    const BeamWeights w = mvdr_weights(from_eigen(phi_s), from_eigen(phi_n));
    // the recovered steering is v up to the convention; check w^H v has unit projection
    Eigen::VectorXcd wv(m), vu = v.normalized();
    for (int i = 0; i < m; ++i) wv(i) = w.chunk_at(0, i);
    CHECK(std::abs(std::abs((wv.adjoint() * vu)(0)) - 1.0) < 1e-6);
  }
}

TEST_CASE("solver failure reports a condition estimate") {
  const int m = 3;
  std::vector<Eigen::MatrixXcd> phi_s(1, Eigen::MatrixXcd::Identity(m, m));
  std::vector<Eigen::MatrixXcd> phi_n(1, Eigen::MatrixXcd::Zero(m, m));
  phi_n[0](0, 0) = -1.0;  // indefinite even after loading
  CHECK_THROWS_WITH_AS((void)mvdr_weights(from_eigen(phi_s), from_eigen(phi_n), 0.0),
                       doctest::Contains("pivot"), Error);
}

TEST_CASE("gev on diagonal matrices picks the dominant direction") {
  const int m = 2;
  std::vector<Eigen::MatrixXcd> phi_s(1, Eigen::MatrixXcd::Zero(m, m));
  phi_s[0](0, 0) = 3.0;
  phi_s[0](1, 1) = 1.0;
  std::vector<Eigen::MatrixXcd> phi_n(1, Eigen::MatrixXcd::Identity(m, m));
  const BeamWeights w = gev_weights(from_eigen(phi_s), from_eigen(phi_n), 0.0);
  CHECK(std::abs(w.chunk_at(0, 0) - cdouble(1, 0)) < 1e-9);
  CHECK(std::abs(w.chunk_at(0, 1)) < 1e-9);
}

TEST_CASE("gev on a rank-1 speech covariance with white noise returns the steering direction") {
  Rng rng(64);
  const int m = 4;
  Eigen::VectorXcd v(m);
  for (int i = 0; i < m; ++i) v(i) = cdouble(uniform(rng), uniform(rng));
  std::vector<Eigen::MatrixXcd> phi_s(1, (v * v.adjoint()).eval());
  std::vector<Eigen::MatrixXcd> phi_n(1, Eigen::MatrixXcd::Identity(m, m));
  const BeamWeights w = gev_weights(from_eigen(phi_s), from_eigen(phi_n), 0.0);
  Eigen::VectorXcd wv(m);
  for (int i = 0; i < m; ++i) wv(i) = w.chunk_at(0, i);
  CHECK(std::abs(std::abs((wv.adjoint() * v.normalized())(0)) - 1.0) < 1e-9);
}

TEST_CASE("gev residual against the dense generalized eigendecomposition oracle") {
  Rng rng(65);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + int(rng() % 4);
    const Eigen::MatrixXcd phi_s = random_hpsd(m, rng, 1e-3);
    const Eigen::MatrixXcd phi_n = random_hpsd(m, rng, 0.5);
    const double delta = 1e-5;

    std::vector<double> lambda;
    const BeamWeights w = gev_weights(from_eigen({phi_s}), from_eigen({phi_n}), delta, &lambda);
    Eigen::VectorXcd wv(m);
    for (int i = 0; i < m; ++i) wv(i) = w.chunk_at(0, i);

    const Eigen::MatrixXcd loaded =
        phi_n + delta * (phi_n.trace().real() / m) * Eigen::MatrixXcd::Identity(m, m);
    // residual of the generalized problem at the returned pair
    CHECK((phi_s * wv - lambda[0] * (loaded * wv)).norm() < 1e-8 * (phi_s * wv).norm());

    // the returned lambda is the maximum generalized eigenvalue
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> oracle(phi_s, loaded);
    CHECK(rel_err(lambda[0], oracle.eigenvalues()(m - 1), 1e-9) < 1e-8);
  }
}

TEST_CASE("selector weights and zero weights behave as expected when applied") {
  Rng rng(66);
  ComplexSpectrogram mix(4, 3, 3);
  for (cdouble& v : mix.data) v = cdouble(uniform(rng), uniform(rng));

  BeamWeights sel;
  sel.bins = 3;
  sel.mics = 3;
  sel.data.assign(9, cdouble(0, 0));
  for (int f = 0; f < 3; ++f) sel.chunk_at(f, 0) = 1.0;
  const ComplexSpectrogram out = apply_beamformer(sel, mix);
  REQUIRE(out.channels == 1);
  for (int t = 0; t < 4; ++t)
    for (int f = 0; f < 3; ++f) CHECK(std::abs(out.at(t, f, 0) - mix.at(t, f, 0)) < 1e-15);

  BeamWeights zero = sel;
  for (cdouble& v : zero.data) v = 0.0;
  const ComplexSpectrogram silent = apply_beamformer(zero, mix);
  for (const cdouble& v : silent.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("apply_beamformer is linear in the spectrogram and honors frame-level weights") {
  Rng rng(67);
  ComplexSpectrogram a(3, 2, 2), b(3, 2, 2);
  for (cdouble& v : a.data) v = cdouble(uniform(rng), uniform(rng));
  for (cdouble& v : b.data) v = cdouble(uniform(rng), uniform(rng));

  BeamWeights w;
  w.frames = 3;
  w.bins = 2;
  w.mics = 2;
  w.data.resize(12);
  for (cdouble& v : w.data) v = cdouble(uniform(rng), uniform(rng));

  ComplexSpectrogram lin(3, 2, 2);
  for (size_t i = 0; i < lin.data.size(); ++i) lin.data[i] = 2.0 * a.data[i] - 3.0 * b.data[i];
  const auto out_lin = apply_beamformer(w, lin);
  const auto out_a = apply_beamformer(w, a);
  const auto out_b = apply_beamformer(w, b);
  for (size_t i = 0; i < out_lin.data.size(); ++i)
    CHECK(std::abs(out_lin.data[i] - (2.0 * out_a.data[i] - 3.0 * out_b.data[i])) < 1e-12);

  // steered-source oracle: Y = v s, weights with w^H v = 1 recover s exactly
  const int m = 2;
  std::vector<std::vector<cdouble>> steer(2, std::vector<cdouble>(m));
  Rng rng2(68);
  for (int f = 0; f < 2; ++f) {
    std::vector<cdouble> v(m);
    for (auto& x : v) x = cdouble(uniform(rng2), uniform(rng2));
    fix_phase(v);
    steer[size_t(f)] = v;
  }
  std::vector<Eigen::MatrixXcd> phi_n(2, Eigen::MatrixXcd::Identity(m, m));
  const BeamWeights mvdr = mvdr_weights_steered(steer, from_eigen(phi_n), 0.0);
  ComplexSpectrogram steered(3, 2, m);
  std::vector<cdouble> s(6);
  for (int t = 0; t < 3; ++t)
    for (int f = 0; f < 2; ++f) {
      s[size_t(t * 2 + f)] = cdouble(uniform(rng2), uniform(rng2));
      for (int c = 0; c < m; ++c) steered.at(t, f, c) = steer[size_t(f)][size_t(c)] * s[size_t(t * 2 + f)];
    }
  const auto rec = apply_beamformer(mvdr, steered);
  for (int t = 0; t < 3; ++t)
    for (int f = 0; f < 2; ++f)
      CHECK(std::abs(rec.at(t, f, 0) - s[size_t(t * 2 + f)]) < 1e-10);
}

TEST_CASE("beam kind names round trip and unknown names list the valid set") {
  CHECK(beam_kind_from("mvdr") == BeamKind::Mvdr);
  CHECK(beam_kind_from("grnn-bf") == BeamKind::GrnnBf);
  CHECK_THROWS_WITH_AS((void)beam_kind_from("fancy"), doctest::Contains("rnn-gev"), ConfigError);
}
