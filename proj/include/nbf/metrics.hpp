#pragma once

#include <span>

#include "nbf/common.hpp"

namespace nbf {

constexpr double kMetricClampDb = 120.0;

/// Scale-invariant SNR in dB between a single-channel estimate and
/// reference, both mean-removed. Clamped to kMetricClampDb.
double si_snr(std::span<const double> estimate, std::span<const double> reference);

/// Plain energy-ratio SDR: 10 log10(|s|^2 / (|s_hat - s|^2 + eps)), no
/// allowed-distortion filter and no scale invariance. Clamped like si_snr.
double sdr(std::span<const double> estimate, std::span<const double> reference);

}  // namespace nbf
