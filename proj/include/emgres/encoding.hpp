#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "emgres/common.hpp"
#include "emgres/dataio.hpp"

namespace emgres {

// Temporal-contrast (delta) encoder parameters. Thresholds are on the
// difference between successive interpolated samples; UP and DN spikes are
// emitted on separate channels with independent refractory clocks.
struct EncoderParams {
  double vthp = 0.5;        // volts, > 0
  double vthn = -0.5;       // volts, < 0
  int interp_factor = 5;    // effective rate = fs * interp_factor
  double refractory_ms = 0.0;

  void validate() const {
    require(vthp > 0, "vthp must be positive");
    require(vthn < 0, "vthn must be negative");
    require(interp_factor >= 1, "interpolation factor must be >= 1");
    require(refractory_ms >= 0, "refractory must be nonnegative");
  }
};

// Linear interpolation: (factor - 1) evenly spaced points inserted between
// each adjacent pair. Output length (n-1)*factor + 1; endpoints preserved.
inline std::vector<double> interpolate(const std::vector<double>& signal,
                                       int factor) {
  require(factor >= 1, "interpolation factor must be >= 1");
  require(signal.size() >= 2, "signal needs at least 2 samples");
  if (factor == 1) return signal;
  std::vector<double> out;
  out.reserve((signal.size() - 1) * factor + 1);
  for (std::size_t i = 0; i + 1 < signal.size(); ++i) {
    for (int k = 0; k < factor; ++k) {
      const double a = static_cast<double>(k) / factor;
      out.push_back(signal[i] + a * (signal[i + 1] - signal[i]));
    }
  }
  out.push_back(signal.back());
  return out;
}

// Encodes one channel. Spike at (interpolated) index k when the step
// difference crosses a threshold; one spike per bin per polarity.
inline std::pair<std::vector<double>, std::vector<double>> encode_channel(
    const std::vector<double>& signal, double fs_hz, const EncoderParams& p) {
  p.validate();
  require(fs_hz > 0, "sample rate must be positive");
  for (double v : signal) require(std::isfinite(v), "signal must be finite");
  const std::vector<double> s = interpolate(signal, p.interp_factor);
  const double dt = 1.0 / (fs_hz * p.interp_factor);
  const double refr_s = p.refractory_ms / 1000.0;
  std::vector<double> up, dn;
  double up_free = -1.0, dn_free = -1.0;  // next time each polarity may fire
  const double slack = 1e-12;  // absorb rounding in t and refractory sums
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double d = s[k] - s[k - 1];
    const double t = static_cast<double>(k) * dt;
    if (d >= p.vthp && t >= up_free - slack) {
      up.push_back(t);
      up_free = t + refr_s;
    }
    if (d <= p.vthn && t >= dn_free - slack) {
      dn.push_back(t);
      dn_free = t + refr_s;
    }
  }
  return {std::move(up), std::move(dn)};
}

// 16-channel stream, layout [UP0..UP7, DN0..DN7].
inline EventStream encode_trial(const Trial& t, const EncoderParams& p) {
  t.validate();
  const int nch = static_cast<int>(t.samples.cols());
  EventStream es;
  es.duration_s = t.duration_s();
  es.channels.resize(2 * static_cast<std::size_t>(nch));
  for (int c = 0; c < nch; ++c) {
    std::vector<double> sig(t.samples.col(c).data(),
                            t.samples.col(c).data() + t.samples.rows());
    auto [up, dn] = encode_channel(sig, t.sample_rate_hz, p);
    es.channels[static_cast<std::size_t>(c)] = std::move(up);
    es.channels[static_cast<std::size_t>(c + nch)] = std::move(dn);
  }
  return es;
}

// Diagnostic reconstruction: cumulative sum of +vthp per UP spike and
// +vthn per DN spike, sampled on the interpolated time grid.
inline std::vector<double> reconstruct(const std::vector<double>& up_times,
                                       const std::vector<double>& dn_times,
                                       const EncoderParams& p,
                                       double duration_s, double fs_hz) {
  p.validate();
  const double dt = 1.0 / (fs_hz * p.interp_factor);
  const auto n = static_cast<std::size_t>(std::lround(duration_s / dt)) + 1;
  std::vector<double> out(n, 0.0);
  double level = 0.0;
  std::size_t iu = 0, id = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double eps = 0.5 * dt;
    while (iu < up_times.size() && up_times[iu] <= t + eps) {
      level += p.vthp;
      ++iu;
    }
    while (id < dn_times.size() && dn_times[id] <= t + eps) {
      level += p.vthn;
      ++id;
    }
    out[k] = level;
  }
  return out;
}

// Independent Poisson spike trains, one per channel. Used as a synthetic
// drive for reservoir diagnostics.
inline EventStream poisson_events(int n_channels, double rate_hz,
                                  double duration_s, std::uint64_t seed) {
  require(n_channels >= 1 && rate_hz >= 0 && duration_s > 0,
          "invalid poisson stream parameters");
  EventStream es;
  es.duration_s = duration_s;
  es.channels.resize(static_cast<std::size_t>(n_channels));
  Rng rng(seed);
  for (auto& ch : es.channels) {
    double t = 0.0;
    while (true) {
      t += -std::log(1.0 - rng.uniform()) / rate_hz;
      if (t >= duration_s) break;
      ch.push_back(t);
    }
  }
  return es;
}

}  // namespace emgres
