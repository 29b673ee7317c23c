#include "nbf/features.hpp"

#include <cmath>
#include <sstream>

namespace nbf {

std::string FeatureLayout::describe() const {
  std::ostringstream os;
  os << "v1;bins=" << bins << ";mics=" << mics << ";pairs=";
  for (size_t p = 0; p < pairs.size(); ++p) {
    if (p) os << ",";
    os << pairs[p].first << "-" << pairs[p].second;
  }
  os << ";blocks=lps[0," << ipd_offset() << "),ipd[" << ipd_offset() << "," << df_offset()
     << "),df[" << df_offset() << "," << dim() << ")";
  return os.str();
}

FeatureLayout FeatureLayout::parse(const std::string& descriptor) {
  FeatureLayout layout;
  std::istringstream is(descriptor);
  std::string token;
  bool have_bins = false, have_mics = false;
  while (std::getline(is, token, ';')) {
    if (token.rfind("bins=", 0) == 0) {
      layout.bins = std::stoi(token.substr(5));
      have_bins = true;
    } else if (token.rfind("mics=", 0) == 0) {
      layout.mics = std::stoi(token.substr(5));
      have_mics = true;
    } else if (token.rfind("pairs=", 0) == 0) {
      std::istringstream ps(token.substr(6));
      std::string pair;
      while (std::getline(ps, pair, ',')) {
        const size_t dash = pair.find('-');
        NBF_REQUIRE(dash != std::string::npos, "feature layout: bad pair " + pair);
        layout.pairs.emplace_back(std::stoi(pair.substr(0, dash)), std::stoi(pair.substr(dash + 1)));
      }
    }
  }
  NBF_REQUIRE(have_bins && have_mics, "feature layout: missing bins/mics in descriptor");
  return layout;
}

FeatureLayout FeatureLayout::against_reference(int bins, int mics, int ref_channel) {
  NBF_REQUIRE(ref_channel >= 0 && ref_channel < mics, "feature layout: bad reference channel");
  FeatureLayout layout;
  layout.bins = bins;
  layout.mics = mics;
  for (int m = 0; m < mics; ++m)
    if (m != ref_channel) layout.pairs.emplace_back(m, ref_channel);
  return layout;
}

RealMatrix lps(const ComplexSpectrogram& spec, int ref_channel) {
  NBF_REQUIRE(ref_channel >= 0 && ref_channel < spec.channels, "lps: bad reference channel");
  RealMatrix out(spec.frames, spec.bins);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < spec.frames; ++t)
    for (int f = 0; f < spec.bins; ++f)
      out.at(t, f) = std::log(std::norm(spec.at(t, f, ref_channel)) + kLpsEpsilon);
  return out;
}

RealMatrix ipd_phase(const ComplexSpectrogram& spec,
                     const std::vector<std::pair<int, int>>& pairs) {
  const int P = int(pairs.size());
  for (auto [i, j] : pairs)
    NBF_REQUIRE(i != j && i >= 0 && j >= 0 && i < spec.channels && j < spec.channels,
                "ipd: invalid channel pair");
  RealMatrix out(spec.frames, int64_t(spec.bins) * P);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      for (int p = 0; p < P; ++p) {
        const cdouble a = spec.at(t, f, pairs[size_t(p)].first);
        const cdouble b = spec.at(t, f, pairs[size_t(p)].second);
        out.at(t, int64_t(f) * P + p) = std::arg(a) - std::arg(b);
      }
    }
  }
  return out;
}

RealMatrix ipd(const ComplexSpectrogram& spec, const std::vector<std::pair<int, int>>& pairs) {
  const int P = int(pairs.size());
  RealMatrix phases = ipd_phase(spec, pairs);
  RealMatrix out(spec.frames, int64_t(spec.bins) * P * 2);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      for (int p = 0; p < P; ++p) {
        const cdouble a = spec.at(t, f, pairs[size_t(p)].first);
        const cdouble b = spec.at(t, f, pairs[size_t(p)].second);
        const int64_t base = (int64_t(f) * P + p) * 2;
        if (std::abs(a) < 1e-12 && std::abs(b) < 1e-12) {
          out.at(t, base) = 1.0;
          out.at(t, base + 1) = 0.0;
        } else {
          const double d = phases.at(t, int64_t(f) * P + p);
          out.at(t, base) = std::cos(d);
          out.at(t, base + 1) = std::sin(d);
        }
      }
    }
  }
  return out;
}

RealMatrix directional_feature(const RealMatrix& ipd_phases, const SteeringVector& steering,
                               const std::vector<std::pair<int, int>>& pairs) {
  const int P = int(pairs.size());
  NBF_REQUIRE(P >= 1, "directional feature: need at least one pair");
  NBF_REQUIRE(ipd_phases.cols == int64_t(steering.bins) * P,
              "directional feature: IPD/steering bin mismatch");
  RealMatrix out(ipd_phases.rows, steering.bins);
#pragma omp parallel for schedule(static)
  for (int64_t t = 0; t < ipd_phases.rows; ++t) {
    for (int f = 0; f < steering.bins; ++f) {
      double acc = 0.0;
      for (int p = 0; p < P; ++p) {
        const double steer_delta = std::arg(steering.at(f, pairs[size_t(p)].first)) -
                                   std::arg(steering.at(f, pairs[size_t(p)].second));
        acc += std::cos(ipd_phases.at(t, int64_t(f) * P + p) - steer_delta);
      }
      out.at(t, f) = acc / P;
    }
  }
  return out;
}

RealMatrix extract_features(const ComplexSpectrogram& spec, const FeatureLayout& layout,
                            const SteeringVector& steering, int ref_channel) {
  NBF_REQUIRE(layout.bins == spec.bins && layout.mics == spec.channels,
              "features: layout does not match spectrogram");
  NBF_REQUIRE(steering.bins == spec.bins, "features: steering bin mismatch");

  const RealMatrix lp = lps(spec, ref_channel);
  const RealMatrix phases = ipd_phase(spec, layout.pairs);
  const RealMatrix cs = ipd(spec, layout.pairs);
  const RealMatrix df = directional_feature(phases, steering, layout.pairs);

  const int F = layout.bins, P = layout.pair_count();
  RealMatrix out(spec.frames, layout.dim());
#pragma omp parallel for schedule(static)
  for (int t = 0; t < spec.frames; ++t) {
    double* row = out.data.data() + size_t(t) * size_t(out.cols);
    for (int f = 0; f < F; ++f) row[f] = lp.at(t, f);
    // per pair: cos block then sin block, F wide each
    for (int p = 0; p < P; ++p) {
      for (int f = 0; f < F; ++f) {
        row[layout.ipd_offset() + (2 * p) * F + f] = cs.at(t, (int64_t(f) * P + p) * 2);
        row[layout.ipd_offset() + (2 * p + 1) * F + f] = cs.at(t, (int64_t(f) * P + p) * 2 + 1);
      }
    }
    for (int f = 0; f < F; ++f) row[layout.df_offset() + f] = df.at(t, f);
  }
  for (double v : out.data) NBF_REQUIRE(std::isfinite(v), "features: non-finite entry");
  return out;
}

}  // namespace nbf
