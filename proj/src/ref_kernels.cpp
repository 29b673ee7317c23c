#include "nbf/ref_kernels.hpp"

#include <cmath>

namespace nbf::ref {

std::vector<cdouble> dft(const std::vector<cdouble>& x, bool inverse) {
  const size_t n = x.size();
  std::vector<cdouble> out(n, cdouble(0, 0));
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n; ++k) {
    for (size_t m = 0; m < n; ++m) {
      const double ang = sign * 2.0 * kPi * double(k) * double(m) / double(n);
      out[k] += x[m] * cdouble(std::cos(ang), std::sin(ang));
    }
  }
  return out;
}

std::vector<cdouble> apply_crf(const std::vector<cdouble>& crf, const std::vector<cdouble>& y,
                               int frames, int bins, int mics, int half_width) {
  const int k = 2 * half_width + 1, k2 = k * k;
  NBF_REQUIRE(int64_t(crf.size()) == int64_t(frames) * bins * k2, "ref::apply_crf: crf size");
  NBF_REQUIRE(int64_t(y.size()) == int64_t(frames) * bins * mics, "ref::apply_crf: y size");
  std::vector<cdouble> out(size_t(frames) * size_t(bins) * size_t(mics), cdouble(0, 0));
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < bins; ++f)
      for (int m = 0; m < mics; ++m) {
        cdouble acc(0, 0);
        for (int t1 = -half_width; t1 <= half_width; ++t1)
          for (int t2 = -half_width; t2 <= half_width; ++t2) {
            const int tt = t + t1, ff = f + t2;
            if (tt < 0 || tt >= frames || ff < 0 || ff >= bins) continue;
            const int tap = (t1 + half_width) * k + (t2 + half_width);
            acc += crf[size_t((int64_t(tt) * bins + ff) * k2 + tap)] *
                   y[size_t((int64_t(tt) * bins + ff) * mics + m)];
          }
        out[size_t((int64_t(t) * bins + f) * mics + m)] = acc;
      }
  return out;
}

std::vector<cdouble> frame_covariance(const std::vector<cdouble>& s, int frames, int bins,
                                      int mics) {
  NBF_REQUIRE(int64_t(s.size()) == int64_t(frames) * bins * mics, "ref::frame_covariance: size");
  std::vector<cdouble> out(size_t(frames) * size_t(bins) * size_t(mics) * size_t(mics));
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < bins; ++f)
      for (int i = 0; i < mics; ++i)
        for (int j = 0; j < mics; ++j)
          out[size_t(((int64_t(t) * bins + f) * mics + i) * mics + j)] =
              s[size_t((int64_t(t) * bins + f) * mics + i)] *
              std::conj(s[size_t((int64_t(t) * bins + f) * mics + j)]);
  return out;
}

std::vector<cdouble> mask_normalize(const std::vector<cdouble>& cov,
                                    const std::vector<cdouble>& crm, int frames, int bins,
                                    int mics) {
  std::vector<cdouble> out = cov;
  for (int f = 0; f < bins; ++f) {
    double d = 0;
    for (int t = 0; t < frames; ++t) d += std::norm(crm[size_t(int64_t(t) * bins + f)]);
    for (int t = 0; t < frames; ++t)
      for (int i = 0; i < mics; ++i)
        for (int j = 0; j < mics; ++j)
          out[size_t(((int64_t(t) * bins + f) * mics + i) * mics + j)] /= d;
  }
  return out;
}

std::vector<cdouble> chunk_covariance(const ComplexSpectrogram& spec, const RealMatrix& mask) {
  const int T = spec.frames, F = spec.bins, M = spec.channels;
  std::vector<cdouble> out(size_t(F) * size_t(M) * size_t(M), cdouble(0, 0));
  for (int f = 0; f < F; ++f) {
    double wsum = 0;
    for (int t = 0; t < T; ++t) wsum += mask.at(t, f) * mask.at(t, f);
    for (int t = 0; t < T; ++t) {
      const double w = mask.at(t, f) * mask.at(t, f);
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
          out[size_t((int64_t(f) * M + i) * M + j)] +=
              w * spec.at(t, f, i) * std::conj(spec.at(t, f, j)) / wsum;
    }
  }
  return out;
}

std::vector<double> gru_forward(const std::vector<double>& x, int frames, int batch, int dim,
                                const std::vector<double>& w_ih, const std::vector<double>& w_hh,
                                const std::vector<double>& bias, int hidden) {
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> h(size_t(frames) * size_t(batch) * size_t(hidden), 0.0);
  std::vector<double> h_prev(size_t(batch) * size_t(hidden), 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int b = 0; b < batch; ++b) {
      const double* xt = x.data() + (size_t(t) * size_t(batch) + size_t(b)) * size_t(dim);
      const double* hp = h_prev.data() + size_t(b) * size_t(hidden);
      double* ht = h.data() + (size_t(t) * size_t(batch) + size_t(b)) * size_t(hidden);
      for (int i = 0; i < hidden; ++i) {
        auto gate = [&](int row) {
          double a = bias[size_t(row)];
          for (int d = 0; d < dim; ++d) a += w_ih[size_t(row) * size_t(dim) + size_t(d)] * xt[d];
          return a;
        };
        auto rec = [&](int row) {
          double a = 0;
          for (int k = 0; k < hidden; ++k)
            a += w_hh[size_t(row) * size_t(hidden) + size_t(k)] * hp[k];
          return a;
        };
        const double r = sigmoid(gate(i) + rec(i));
        const double z = sigmoid(gate(hidden + i) + rec(hidden + i));
        const double c = std::tanh(gate(2 * hidden + i) + r * rec(2 * hidden + i));
        ht[i] = (1.0 - z) * hp[i] + z * c;
      }
    }
    std::copy_n(h.data() + size_t(t) * size_t(batch) * size_t(hidden),
                size_t(batch) * size_t(hidden), h_prev.data());
  }
  return h;
}

}  // namespace nbf::ref
