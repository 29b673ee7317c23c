#include "nbf/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace nbf {

double si_snr(std::span<const double> estimate, std::span<const double> reference) {
  NBF_REQUIRE(estimate.size() == reference.size() && !estimate.empty(),
              "si_snr: length mismatch");
  const size_t n = estimate.size();
  double mean_e = 0, mean_r = 0;
  for (size_t i = 0; i < n; ++i) {
    mean_e += estimate[i];
    mean_r += reference[i];
  }
  mean_e /= double(n);
  mean_r /= double(n);

  double dot = 0, ss = 0;
  for (size_t i = 0; i < n; ++i) {
    const double u = estimate[i] - mean_e, s = reference[i] - mean_r;
    dot += u * s;
    ss += s * s;
  }
  NBF_REQUIRE(ss > 0, "si_snr: zero-energy reference");
  const double alpha = dot / ss;

  double p = 0, e2 = 0;
  for (size_t i = 0; i < n; ++i) {
    const double u = estimate[i] - mean_e, s = reference[i] - mean_r;
    const double st = alpha * s;
    p += st * st;
    e2 += (u - st) * (u - st);
  }
  const double value = 10.0 * std::log10(p / (e2 + 1e-12));
  return std::min(value, kMetricClampDb);
}

double sdr(std::span<const double> estimate, std::span<const double> reference) {
  NBF_REQUIRE(estimate.size() == reference.size() && !estimate.empty(), "sdr: length mismatch");
  double p = 0, e2 = 0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    p += reference[i] * reference[i];
    const double d = estimate[i] - reference[i];
    e2 += d * d;
  }
  NBF_REQUIRE(p > 0, "sdr: zero-energy reference");
  const double value = 10.0 * std::log10(p / (e2 + 1e-12));
  return std::min(value, kMetricClampDb);
}

}  // namespace nbf
