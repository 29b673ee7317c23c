#include "nbf/stft.hpp"

#include <cmath>

namespace nbf {

namespace {
bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

void StftConfig::validate() const {
  NBF_REQUIRE(fft_size >= 2 && is_pow2(fft_size), "stft: fft_size must be a power of two");
  NBF_REQUIRE(window_length >= 2, "stft: window_length must be >= 2");
  NBF_REQUIRE(fft_size >= window_length, "stft: fft_size must be >= window_length");
  NBF_REQUIRE(hop >= 1 && window_length % hop == 0, "stft: hop must divide window_length");
  NBF_REQUIRE(hop < window_length, "stft: hop must be < window_length (overlap required)");
}

void fft_radix2(std::vector<cdouble>& x, bool inverse) {
  const size_t n = x.size();
  NBF_REQUIRE(is_pow2(int(n)), "fft: size must be a power of two");
  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / double(len);
    const cdouble wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cdouble u = x[i + k];
        cdouble v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

Stft::Stft(const StftConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int W = cfg_.window_length, H = cfg_.hop;
  analysis_.resize(W);
  for (int n = 0; n < W; ++n)
    analysis_[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * double(n) / double(W)));

  // D(phi) = sum of w^2 over window positions congruent to phi mod hop.
  std::vector<double> envelope(H, 0.0);
  for (int n = 0; n < W; ++n) envelope[n % H] += analysis_[n] * analysis_[n];
  for (int phi = 0; phi < H; ++phi)
    NBF_REQUIRE(envelope[phi] > 1e-12, "stft: degenerate window power envelope");

  synthesis_.resize(W);
  for (int n = 0; n < W; ++n) synthesis_[n] = analysis_[n] / envelope[n % H];
}

ComplexSpectrogram Stft::forward(const WaveBuffer& wave) const {
  const int W = cfg_.window_length, H = cfg_.hop, N = cfg_.fft_size, F = cfg_.bins();
  NBF_REQUIRE(wave.length >= W, "stft: signal shorter than one window");
  const auto T = int(cfg_.frames_for(wave.length));
  const int M = wave.channels;
  const int pad_left = (N - W) / 2;  // symmetric zero-padding to fft_size

  ComplexSpectrogram spec(T, F, M);
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int t = 0; t < T; ++t) {
      std::vector<cdouble> buf(size_t(N), cdouble(0.0, 0.0));
      auto ch = wave.channel(m);
      const int64_t start = int64_t(t) * H;
      for (int n = 0; n < W; ++n)
        buf[size_t(pad_left + n)] = cdouble(analysis_[n] * ch[size_t(start + n)], 0.0);
      fft_radix2(buf, false);
      for (int f = 0; f < F; ++f) spec.at(t, f, m) = buf[size_t(f)];
    }
  }
  for (const cdouble& v : spec.data)
    NBF_REQUIRE(std::isfinite(v.real()) && std::isfinite(v.imag()),
                "stft: non-finite spectrogram entry");
  return spec;
}

WaveBuffer Stft::inverse(const ComplexSpectrogram& spec, double sample_rate) const {
  const int W = cfg_.window_length, H = cfg_.hop, N = cfg_.fft_size, F = cfg_.bins();
  NBF_REQUIRE(spec.bins == F, "istft: bin count does not match config");
  NBF_REQUIRE(spec.frames >= 1, "istft: empty spectrogram");
  const int T = spec.frames, M = spec.channels;
  const int pad_left = (N - W) / 2;
  const int64_t length = cfg_.synthesis_length(T);

  // IDFT per frame in parallel, then a cheap serial overlap-add.
  std::vector<double> frames(size_t(T) * size_t(M) * size_t(W));
#pragma omp parallel for collapse(2) schedule(static)
  for (int m = 0; m < M; ++m) {
    for (int t = 0; t < T; ++t) {
      std::vector<cdouble> buf(static_cast<size_t>(N));
      for (int f = 0; f < F; ++f) buf[size_t(f)] = spec.at(t, f, m);
      for (int f = F; f < N; ++f) buf[size_t(f)] = std::conj(spec.at(t, N - f, m));
      fft_radix2(buf, true);
      double* dst = frames.data() + (size_t(m) * size_t(T) + size_t(t)) * size_t(W);
      for (int n = 0; n < W; ++n) dst[n] = buf[size_t(pad_left + n)].real() / double(N);
    }
  }

  WaveBuffer out(M, length, sample_rate);
  for (int m = 0; m < M; ++m) {
    auto ch = out.channel(m);
    for (int t = 0; t < T; ++t) {
      const double* src = frames.data() + (size_t(m) * size_t(T) + size_t(t)) * size_t(W);
      const int64_t start = int64_t(t) * H;
      for (int n = 0; n < W; ++n) ch[size_t(start + n)] += synthesis_[n] * src[n];
    }
  }
  return out;
}

}  // namespace nbf
