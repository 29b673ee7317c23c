// Benchmark comparing the OpenMP kernels against the serial reference
// implementations, with an agreement check on each pair.

#include <chrono>
#include <cstdio>
#include <functional>

#include "nbf/graph.hpp"
#include "nbf/pipeline.hpp"
#include "nbf/ref_kernels.hpp"

using namespace nbf;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  const double t0 = now_ms();
  for (int i = 0; i < reps; ++i) fn();
  return (now_ms() - t0) / reps;
}

void row(const char* name, double ref_ms, double kernel_ms, double max_diff) {
  std::printf("%-24s ref %9.3f ms   kernel %9.3f ms   speedup %6.2fx   max|diff| %.3e\n", name,
              ref_ms, kernel_ms, ref_ms / kernel_ms, max_diff);
}

double uniform(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) set_threads(std::atoi(argv[1]));
  std::printf("threads: %d\n", threads());
  Rng rng(7);

  {  // stft frame transform vs naive DFT
    const int n = 512;
    std::vector<cdouble> x(n);
    for (auto& v : x) v = cdouble(uniform(rng), uniform(rng));
    std::vector<cdouble> fast;
    const double k_ms = time_ms(
        [&] {
          fast = x;
          fft_radix2(fast, false);
        },
        200);
    std::vector<cdouble> slow;
    const double r_ms = time_ms([&] { slow = ref::dft(x, false); }, 20);
    double diff = 0;
    for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(fast[size_t(i)] - slow[size_t(i)]));
    row("fft 512", r_ms, k_ms, diff);
  }

  const int T = 120, F = 129, M = 4, K = 1;
  {  // cRF application
    const int k2 = (2 * K + 1) * (2 * K + 1);
    std::vector<cdouble> crf(size_t(T) * F * k2), y(size_t(T) * F * M);
    for (auto& v : crf) v = cdouble(uniform(rng), uniform(rng));
    for (auto& v : y) v = cdouble(uniform(rng), uniform(rng));

    Tensor<double> crf_t({T, F, 2 * k2}), y_t({T, F, 2 * M});
    for (int64_t i = 0; i < int64_t(T) * F; ++i) {
      for (int j = 0; j < k2; ++j) {
        crf_t.v[size_t(i * 2 * k2 + j)] = crf[size_t(i * k2 + j)].real();
        crf_t.v[size_t(i * 2 * k2 + k2 + j)] = crf[size_t(i * k2 + j)].imag();
      }
      for (int m = 0; m < M; ++m) {
        y_t.v[size_t(i * 2 * M + m)] = y[size_t(i * M + m)].real();
        y_t.v[size_t(i * 2 * M + M + m)] = y[size_t(i * M + m)].imag();
      }
    }
    std::vector<cdouble> slow;
    const double r_ms = time_ms([&] { slow = ref::apply_crf(crf, y, T, F, M, K); }, 5);
    Graph<double>* gp = nullptr;
    typename Graph<double>::Var out = -1;
    const double k_ms = time_ms(
        [&] {
          delete gp;
          gp = new Graph<double>();
          out = gp->apply_crf(gp->constant(crf_t), gp->constant(y_t), F, M, K);
        },
        5);
    double diff = 0;
    const auto& v = gp->value(out).v;
    for (int64_t i = 0; i < int64_t(T) * F; ++i)
      for (int m = 0; m < M; ++m)
        diff = std::max(diff, std::abs(cdouble(v[size_t(i * 2 * M + m)],
                                               v[size_t(i * 2 * M + M + m)]) -
                                       slow[size_t(i * M + m)]));
    delete gp;
    row("apply_crf", r_ms, k_ms, diff);
  }

  {  // frame covariance
    ComplexSpectrogram est(T, F, M);
    for (auto& v : est.data) v = cdouble(uniform(rng), uniform(rng));
    std::vector<cdouble> flat(est.data.begin(), est.data.end());
    CovarianceSequence cov;
    const double k_ms = time_ms([&] { cov = frame_covariance(est); }, 20);
    std::vector<cdouble> slow;
    const double r_ms = time_ms([&] { slow = ref::frame_covariance(flat, T, F, M); }, 20);
    double diff = 0;
    for (size_t i = 0; i < slow.size(); ++i) diff = std::max(diff, std::abs(cov.data[i] - slow[i]));
    row("frame_covariance", r_ms, k_ms, diff);
  }

  {  // chunk covariance
    ComplexSpectrogram spec(T, F, M);
    for (auto& v : spec.data) v = cdouble(uniform(rng), uniform(rng));
    RealMatrix mask(T, F);
    for (auto& v : mask.data) v = 0.5 * (uniform(rng) + 1.0);
    ChunkCovariance cov;
    const double k_ms = time_ms([&] { cov = chunk_covariance(spec, mask); }, 20);
    std::vector<cdouble> slow;
    const double r_ms = time_ms([&] { slow = ref::chunk_covariance(spec, mask); }, 20);
    double diff = 0;
    for (size_t i = 0; i < slow.size(); ++i) diff = std::max(diff, std::abs(cov.data[i] - slow[i]));
    row("chunk_covariance", r_ms, k_ms, diff);
  }

  {  // GRU layer, batched GEMM kernel vs scalar loops
    const int B = 64, D = 32, H = 48;
    Tensor<double> x({T, B, D});
    for (auto& v : x.v) v = uniform(rng) * 0.5;
    Parameter<double> w_ih("w_ih", {3 * H, D}), w_hh("w_hh", {3 * H, H}), b("b", {3 * H});
    for (auto& v : w_ih.value.v) v = uniform(rng) * 0.3;
    for (auto& v : w_hh.value.v) v = uniform(rng) * 0.3;
    for (auto& v : b.value.v) v = uniform(rng) * 0.1;

    Graph<double>* gp = nullptr;
    typename Graph<double>::Var out = -1;
    const double k_ms = time_ms(
        [&] {
          delete gp;
          gp = new Graph<double>();
          out = gp->gru(gp->constant(x), gp->param(w_ih), gp->param(w_hh), gp->param(b));
        },
        5);
    std::vector<double> slow;
    const double r_ms = time_ms(
        [&] { slow = ref::gru_forward(x.v, T, B, D, w_ih.value.v, w_hh.value.v, b.value.v, H); },
        5);
    double diff = 0;
    const auto& v = gp->value(out).v;
    for (size_t i = 0; i < slow.size(); ++i) diff = std::max(diff, std::fabs(v[i] - slow[i]));
    delete gp;
    row("gru layer", r_ms, k_ms, diff);
  }

  return 0;
}
