#pragma once

#include <vector>

#include "nbf/common.hpp"
#include "nbf/features.hpp"
#include "nbf/stft.hpp"

namespace nbf::ref {

/// Serial reference implementations written straight from the definitions.
/// They stay independent of the OpenMP kernels: tests compare the two paths
/// and the benchmark binary times them against each other.

/// Naive O(N^2) DFT.
std::vector<cdouble> dft(const std::vector<cdouble>& x, bool inverse);

/// out(t,f,m) = sum_{t1,t2} crf(t+t1, f+t2)[tap(t1,t2)] * y(t+t1, f+t2, m),
/// zero outside bounds. crf is [T x F x K2] complex, tap-major (t1, t2).
std::vector<cdouble> apply_crf(const std::vector<cdouble>& crf, const std::vector<cdouble>& y,
                               int frames, int bins, int mics, int half_width);

/// phi(t,f) = s(t,f) s(t,f)^H, [T x F x M x M].
std::vector<cdouble> frame_covariance(const std::vector<cdouble>& s, int frames, int bins,
                                      int mics);

/// Divide phi(t,f) by sum_t |crm(t,f)|^2.
std::vector<cdouble> mask_normalize(const std::vector<cdouble>& cov,
                                    const std::vector<cdouble>& crm, int frames, int bins,
                                    int mics);

/// Eq.-(2)-style chunk covariance, [F x M x M].
std::vector<cdouble> chunk_covariance(const ComplexSpectrogram& spec, const RealMatrix& mask);

/// Scalar-loop GRU stack layer (same gate math as the batched kernel):
/// x [T x B x D] -> h [T x B x H]. Weights row-major as in the graph op.
std::vector<double> gru_forward(const std::vector<double>& x, int frames, int batch, int dim,
                                const std::vector<double>& w_ih, const std::vector<double>& w_hh,
                                const std::vector<double>& bias, int hidden);

}  // namespace nbf::ref
