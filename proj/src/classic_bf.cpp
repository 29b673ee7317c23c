#include "nbf/classic_bf.hpp"

#include <cmath>

namespace nbf {

const char* beam_kind_name(BeamKind kind) {
  switch (kind) {
    case BeamKind::Mvdr: return "mvdr";
    case BeamKind::Gev: return "gev";
    case BeamKind::RnnGev: return "rnn-gev";
    case BeamKind::GrnnBf: return "grnn-bf";
  }
  return "?";
}

BeamKind beam_kind_from(const std::string& name) {
  if (name == "mvdr") return BeamKind::Mvdr;
  if (name == "gev") return BeamKind::Gev;
  if (name == "rnn-gev") return BeamKind::RnnGev;
  if (name == "grnn-bf") return BeamKind::GrnnBf;
  throw ConfigError("unknown beamformer kind '" + name +
                    "' (valid: mvdr, gev, rnn-gev, grnn-bf)");
}

std::vector<cdouble> diagonal_load(const cdouble* phi, int mics, double delta) {
  std::vector<cdouble> out(phi, phi + size_t(mics) * size_t(mics));
  double trace = 0.0;
  for (int i = 0; i < mics; ++i) trace += out[size_t(i) * size_t(mics) + size_t(i)].real();
  const double add = delta * trace / mics;
  for (int i = 0; i < mics; ++i) out[size_t(i) * size_t(mics) + size_t(i)] += add;
  return out;
}

namespace {

/// Principal eigenvector, unit norm, phase-fixed.
std::vector<cdouble> principal_eigvec(const cdouble* phi, int mics) {
  const HermitianEig eig = hermitian_eig(phi, mics);
  std::vector<cdouble> v(static_cast<size_t>(mics));
  for (int i = 0; i < mics; ++i) v[size_t(i)] = eig.vectors[size_t(i) * size_t(mics) + size_t(mics - 1)];
  fix_phase(v);
  return v;
}

std::vector<cdouble> mvdr_solve(const std::vector<cdouble>& steer, const cdouble* phi_n, int mics,
                                double loading) {
  std::vector<cdouble> l = diagonal_load(phi_n, mics, loading);
  cholesky(l, mics);
  std::vector<cdouble> x = steer;
  solve_lower(l, mics, x);
  solve_lower_adjoint(l, mics, x);  // x = loaded(phi_n)^{-1} v
  cdouble denom(0, 0);
  for (int i = 0; i < mics; ++i) denom += std::conj(steer[size_t(i)]) * x[size_t(i)];
  NBF_REQUIRE(std::abs(denom) > 0, "mvdr: degenerate steering vector");
  for (cdouble& w : x) w /= denom;
  return x;
}

/// Run a per-bin solver body under OpenMP without letting exceptions cross
/// the parallel region; the first failure is rethrown afterwards.
template <class Fn>
void for_each_bin(int bins, Fn&& body) {
  std::string error;
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (int f = 0; f < bins; ++f) {
    if (failed) continue;
    try {
      body(f);
    } catch (const std::exception& ex) {
#pragma omp critical
      {
        if (!failed) error = "bin " + std::to_string(f) + ": " + ex.what();
        failed = true;
      }
    }
  }
  if (failed) throw Error(error);
}

}  // namespace

BeamWeights mvdr_weights(const ChunkCovariance& phi_s, const ChunkCovariance& phi_n,
                         double loading) {
  NBF_REQUIRE(phi_s.bins == phi_n.bins && phi_s.mics == phi_n.mics, "mvdr: shape mismatch");
  const int F = phi_s.bins, M = phi_s.mics;
  BeamWeights w;
  w.kind = BeamKind::Mvdr;
  w.bins = F;
  w.mics = M;
  w.data.resize(size_t(F) * size_t(M));
  for_each_bin(F, [&](int f) {
    const std::vector<cdouble> steer = principal_eigvec(phi_s.matrix(f), M);
    const std::vector<cdouble> wf = mvdr_solve(steer, phi_n.matrix(f), M, loading);
    for (int m = 0; m < M; ++m) w.chunk_at(f, m) = wf[size_t(m)];
  });
  return w;
}

BeamWeights mvdr_weights_steered(const std::vector<std::vector<cdouble>>& steering,
                                 const ChunkCovariance& phi_n, double loading) {
  const int F = phi_n.bins, M = phi_n.mics;
  NBF_REQUIRE(int(steering.size()) == F, "mvdr: steering bin count mismatch");
  BeamWeights w;
  w.kind = BeamKind::Mvdr;
  w.bins = F;
  w.mics = M;
  w.data.resize(size_t(F) * size_t(M));
  for_each_bin(F, [&](int f) {
    const std::vector<cdouble> wf = mvdr_solve(steering[size_t(f)], phi_n.matrix(f), M, loading);
    for (int m = 0; m < M; ++m) w.chunk_at(f, m) = wf[size_t(m)];
  });
  return w;
}

BeamWeights gev_weights(const ChunkCovariance& phi_s, const ChunkCovariance& phi_n, double loading,
                        std::vector<double>* eigenvalues_out) {
  NBF_REQUIRE(phi_s.bins == phi_n.bins && phi_s.mics == phi_n.mics, "gev: shape mismatch");
  const int F = phi_s.bins, M = phi_s.mics;
  BeamWeights w;
  w.kind = BeamKind::Gev;
  w.bins = F;
  w.mics = M;
  w.data.resize(size_t(F) * size_t(M));
  if (eigenvalues_out) eigenvalues_out->assign(size_t(F), 0.0);

  for_each_bin(F, [&](int f) {
    // reduce phi_s x = lambda loaded(phi_n) x via Cholesky: C = L^-1 phi_s L^-H
    std::vector<cdouble> l = diagonal_load(phi_n.matrix(f), M, loading);
    cholesky(l, M);

    std::vector<cdouble> y(size_t(M) * size_t(M));  // columns of L^-1 phi_s
    for (int j = 0; j < M; ++j) {
      std::vector<cdouble> col(static_cast<size_t>(M));
      for (int i = 0; i < M; ++i) col[size_t(i)] = phi_s.at(f, i, j);
      solve_lower(l, M, col);
      for (int i = 0; i < M; ++i) y[size_t(i) * size_t(M) + size_t(j)] = col[size_t(i)];
    }
    std::vector<cdouble> c(size_t(M) * size_t(M));  // (L^-1 y^H)^H
    for (int j = 0; j < M; ++j) {
      std::vector<cdouble> col(static_cast<size_t>(M));
      for (int i = 0; i < M; ++i) col[size_t(i)] = std::conj(y[size_t(j) * size_t(M) + size_t(i)]);
      solve_lower(l, M, col);
      for (int i = 0; i < M; ++i) c[size_t(j) * size_t(M) + size_t(i)] = std::conj(col[size_t(i)]);
    }

    const HermitianEig eig = hermitian_eig(c.data(), M);
    std::vector<cdouble> u(static_cast<size_t>(M));
    for (int i = 0; i < M; ++i) u[size_t(i)] = eig.vectors[size_t(i) * size_t(M) + size_t(M - 1)];
    solve_lower_adjoint(l, M, u);  // w = L^-H u
    fix_phase(u);
    for (int m = 0; m < M; ++m) w.chunk_at(f, m) = u[size_t(m)];
    if (eigenvalues_out) (*eigenvalues_out)[size_t(f)] = eig.eigenvalues[size_t(M - 1)];
  });
  return w;
}

ComplexSpectrogram apply_beamformer(const BeamWeights& weights, const ComplexSpectrogram& mix) {
  NBF_REQUIRE(weights.bins == mix.bins && weights.mics == mix.channels,
              "apply_beamformer: shape mismatch");
  if (!weights.chunk_level())
    NBF_REQUIRE(weights.frames == mix.frames, "apply_beamformer: frame count mismatch");
  const int T = mix.frames, F = mix.bins, M = mix.channels;

  ComplexSpectrogram out(T, F, 1);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      cdouble acc(0, 0);
      for (int m = 0; m < M; ++m) {
        const cdouble w = weights.chunk_level() ? weights.chunk_at(f, m) : weights.frame_at(t, f, m);
        acc += std::conj(w) * mix.at(t, f, m);
      }
      out.at(t, f, 0) = acc;
    }
  }
  return out;
}

}  // namespace nbf
