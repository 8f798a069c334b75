#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "emgres/common.hpp"

namespace emgres {

// Adaptive LIF parameters. Membrane leaks to v0 with time constant tau;
// the firing threshold jumps by vthi on each spike and leaks back to vth0
// with time constant tau_vth.
struct NeuronParams {
  double v0 = 0.0;           // volts, rest == reset
  double tau_ms = 20.0;      // membrane leak, drawn per neuron from [15, 25]
  double refractory_ms = 1.0;
  double vth0 = 1.0;         // threshold rest value
  double vthi = 0.1;         // threshold increment per spike
  double tau_vth_ms = 50.0;  // threshold leak

  void validate() const {
    require(tau_ms > 0 && tau_vth_ms > 0, "time constants must be positive");
    require(vth0 > v0, "threshold rest must exceed membrane rest");
    require(vthi >= 0, "threshold increment must be nonnegative");
    require(refractory_ms >= 0, "refractory must be nonnegative");
  }
};

// Per-neuron tau drawn uniformly from [15, 25] ms, other fields from the
// template. Deterministic given seed.
inline std::vector<NeuronParams> draw_population(std::size_t n,
                                                 const NeuronParams& tmpl,
                                                 std::uint64_t seed) {
  require(n >= 1, "population must be nonempty");
  tmpl.validate();
  Rng rng(seed);
  std::vector<NeuronParams> out(n, tmpl);
  for (auto& p : out) p.tau_ms = rng.uniform(15.0, 25.0);
  return out;
}

// Fixed-step population state. Updates use the exact exponential solution
// of the leak ODEs, so a 1 ms step matches the analytic decay to machine
// precision. Step order: leak, integrate, fire.
class Population {
 public:
  explicit Population(std::vector<NeuronParams> params)
      : params_(std::move(params)) {
    for (const auto& p : params_) p.validate();
    reset();
  }

  std::size_t size() const { return params_.size(); }
  double t_now_ms() const { return t_ms_; }

  // True when neuron i will ignore input at the current step time.
  bool refractory(std::size_t i) const { return t_ms_ < refr_until_[i]; }
  const std::vector<double>& v() const { return v_; }
  const std::vector<double>& vth() const { return vth_; }
  const std::vector<NeuronParams>& params() const { return params_; }

  void reset() {
    const std::size_t n = params_.size();
    v_.assign(n, 0.0);
    vth_.assign(n, 0.0);
    refr_until_.assign(n, -1.0);
    for (std::size_t i = 0; i < n; ++i) {
      v_[i] = params_[i].v0;
      vth_[i] = params_[i].vth0;
    }
    t_ms_ = 0.0;
  }

  // Advances one step of dt_ms. increments[i] is the summed synaptic
  // impulse delivered to neuron i this step; it is discarded while the
  // neuron is refractory. spiked is resized and filled.
  void step(std::span<const double> increments, double dt_ms,
            std::vector<std::uint8_t>& spiked) {
    require(dt_ms > 0, "dt must be positive");
    require(increments.size() == params_.size(), "increment size mismatch");
    const std::size_t n = params_.size();
    spiked.assign(n, 0);
    if (dt_ms != cached_dt_ms_) precompute_decay(dt_ms);
    for (std::size_t i = 0; i < n; ++i) {
      const NeuronParams& p = params_[i];
      const bool refractory = t_ms_ < refr_until_[i];
      vth_[i] = p.vth0 + (vth_[i] - p.vth0) * vth_decay_[i];
      if (refractory) {
        v_[i] = p.v0;  // clamped through the refractory period
        continue;
      }
      v_[i] = p.v0 + (v_[i] - p.v0) * v_decay_[i];
      require(std::isfinite(increments[i]), "synaptic increment must be finite");
      v_[i] += increments[i];
      if (v_[i] >= vth_[i]) {
        spiked[i] = 1;
        v_[i] = p.v0;
        vth_[i] += p.vthi;
        refr_until_[i] = t_ms_ + dt_ms + p.refractory_ms;
      }
    }
    t_ms_ += dt_ms;
  }

 private:
  void precompute_decay(double dt_ms) {
    const std::size_t n = params_.size();
    v_decay_.resize(n);
    vth_decay_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      v_decay_[i] = std::exp(-dt_ms / params_[i].tau_ms);
      vth_decay_[i] = std::exp(-dt_ms / params_[i].tau_vth_ms);
    }
    cached_dt_ms_ = dt_ms;
  }

  std::vector<NeuronParams> params_;
  std::vector<double> v_, vth_, refr_until_;
  std::vector<double> v_decay_, vth_decay_;
  double cached_dt_ms_ = -1.0;
  double t_ms_ = 0.0;
};

}  // namespace emgres
