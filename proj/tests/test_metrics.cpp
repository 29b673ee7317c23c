#include <cmath>

#include "doctest.h"
#include "nbf/metrics.hpp"
#include "oracles.hpp"

using namespace nbf;
using namespace nbf::test;

namespace {
std::vector<double> random_signal(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng);
  return v;
}
}  // namespace

TEST_CASE("perfect estimate clamps at 120 dB") {
  const auto s = random_signal(512, 81);
  CHECK(si_snr(s, s) == kMetricClampDb);
  CHECK(sdr(s, s) == kMetricClampDb);
}

TEST_CASE("si_snr is invariant to positive scaling of the estimate") {
  const auto s = random_signal(512, 82);
  auto scaled = s;
  for (double& v : scaled) v *= 3.7;
  CHECK(si_snr(scaled, s) == si_snr(s, s));
  const auto est = random_signal(512, 83);
  auto est_scaled = est;
  for (double& v : est_scaled) v *= 0.4;
  CHECK(si_snr(est, s) == doctest::Approx(si_snr(est_scaled, s)).epsilon(1e-9));
}

TEST_CASE("orthogonal error of equal energy gives exactly 0 dB") {
  const size_t n = 256;
  std::vector<double> s(n), e(n);
  for (size_t i = 0; i < n; ++i) {
    s[i] = std::sin(2.0 * kPi * double(i) * 8.0 / double(n));
    e[i] = std::cos(2.0 * kPi * double(i) * 8.0 / double(n));  // orthogonal, equal energy
  }
  std::vector<double> est(n);
  for (size_t i = 0; i < n; ++i) est[i] = s[i] + e[i];
  CHECK(si_snr(est, s) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("sdr is deliberately scale-sensitive") {
  const auto s = random_signal(512, 84);
  auto doubled = s;
  for (double& v : doubled) v *= 2.0;
  CHECK(sdr(doubled, s) == doctest::Approx(0.0).epsilon(1e-9));  // |2s - s| = |s|
  std::vector<double> zeros(s.size(), 0.0);
  CHECK(sdr(zeros, s) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zero-energy references are rejected") {
  const auto s = random_signal(64, 85);
  const std::vector<double> zeros(64, 0.0);
  CHECK_THROWS_AS((void)si_snr(s, zeros), Error);
  CHECK_THROWS_AS((void)sdr(s, zeros), Error);
}

TEST_CASE("si_snr ignores dc offsets through mean removal") {
  const auto s = random_signal(512, 86);
  auto shifted = s;
  for (double& v : shifted) v += 5.0;
  CHECK(si_snr(shifted, s) == doctest::Approx(si_snr(s, s)));
}

TEST_CASE("property: scale invariance and sdr scale sensitivity on random pairs") {
  Rng rng(87);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_signal(128, 880 + uint64_t(trial));
    const auto e = random_signal(128, 990 + uint64_t(trial));
    const double alpha = std::exp(uniform(rng, -2.0, 2.0));
    std::vector<double> est(128), est_scaled(128);
    for (size_t i = 0; i < 128; ++i) {
      est[i] = s[i] + 0.3 * e[i];
      est_scaled[i] = alpha * est[i];
    }
    CHECK(rel_err(si_snr(est, s), si_snr(est_scaled, s), 1e-9) < 1e-9);
    if (std::fabs(alpha - 1.0) > 0.2) CHECK(std::fabs(sdr(est, s) - sdr(est_scaled, s)) > 1e-6);
  }
}
