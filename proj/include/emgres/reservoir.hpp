#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "emgres/common.hpp"
#include "emgres/dataio.hpp"
#include "emgres/encoding.hpp"
#include "emgres/neuron.hpp"
#include "emgres/plasticity.hpp"
#include "emgres/topology.hpp"

namespace emgres {

struct SimulationConfig {
  double dt_ms = 1.0;
  bool record_raster = true;
  bool plasticity_enabled = true;
  bool reset_between_trials = true;
  std::uint64_t seed = 0;

  void validate() const { require(dt_ms > 0, "dt must be positive"); }
};

// Clock-driven simulation engine. Per step: bin input events, sum recurrent
// increments from the previous step's spikes (one-step synaptic latency),
// advance the population, feed spikes to the plasticity ledger. Membrane
// and threshold state reset between trials; plastic weights persist.
class Engine {
 public:
  Engine(const Wiring& wiring, std::vector<NeuronParams> neuron_params,
         const CriticalParams& critical, const SimulationConfig& cfg)
      : wiring_(wiring),
        population_(std::move(neuron_params)),
        ledger_(wiring, critical),
        cfg_(cfg) {
    cfg_.validate();
    require(population_.size() == static_cast<std::size_t>(wiring.n_neurons()),
            "population / wiring size mismatch");
    weights_.reserve(wiring_.recurrent.size());
    for (const auto& s : wiring_.recurrent) weights_.push_back(s.weight);
    out_syn_.resize(population_.size());
    for (std::size_t s = 0; s < wiring_.recurrent.size(); ++s)
      out_syn_[static_cast<std::size_t>(wiring_.recurrent[s].pre)].push_back(
          static_cast<int>(s));
  }

  const std::vector<double>& recurrent_weights() const { return weights_; }
  std::vector<double>& mutable_recurrent_weights() { return weights_; }
  const Wiring& wiring() const { return wiring_; }
  const BranchingLedger& ledger() const { return ledger_; }
  BranchingLedger& mutable_ledger() { return ledger_; }
  void set_plasticity_enabled(bool on) { cfg_.plasticity_enabled = on; }

  // Scale every recurrent weight; used for the unregulated controls.
  void scale_weights(double factor) {
    for (double& w : weights_) w *= factor;
  }

  void reset_state() {
    population_.reset();
    ledger_.reset();
    prev_spikers_.clear();
  }

  // Runs one trial's event stream through the reservoir. When reset is
  // false the membrane/threshold/ledger state carries over from the
  // previous call (continuous stimulation).
  Raster run_trial(const EventStream& events, bool reset = true) {
    if (static_cast<int>(events.channels.size()) != wiring_.n_input_channels)
      throw std::invalid_argument("event stream channel count does not match input wiring");
    if (reset) reset_state();
    const double dt = cfg_.dt_ms;
    const auto n = population_.size();
    const auto n_steps =
        static_cast<long>(std::lround(events.duration_s * 1000.0 / dt));
    const double t_base = population_.t_now_ms();

    Raster raster;
    raster.duration_s = events.duration_s;
    raster.channels.resize(n);

    std::vector<std::size_t> input_cursor(events.channels.size(), 0);
    std::vector<double> increments(n);
    std::vector<std::uint8_t> spiked;
    for (long step = 0; step < n_steps; ++step) {
      const double t = population_.t_now_ms();
      std::fill(increments.begin(), increments.end(), 0.0);
      // input events landing in this step
      for (std::size_t ch = 0; ch < events.channels.size(); ++ch) {
        const auto& times = events.channels[ch];
        auto& ic = input_cursor[ch];
        while (ic < times.size() &&
               static_cast<long>(std::floor(times[ic] * 1000.0 / dt)) == step) {
          for (int s : input_by_channel(ch)) {
            const auto& syn = wiring_.input[static_cast<std::size_t>(s)];
            if (!population_.refractory(static_cast<std::size_t>(syn.post))) {
              increments[static_cast<std::size_t>(syn.post)] += syn.weight;
              ledger_.note_increment(syn.post, syn.weight);
            }
          }
          ++ic;
        }
      }
      // recurrent spikes from the previous step
      for (int i : prev_spikers_)
        for (int s : out_syn_[static_cast<std::size_t>(i)]) {
          const auto& syn = wiring_.recurrent[static_cast<std::size_t>(s)];
          const auto post = static_cast<std::size_t>(syn.post);
          if (population_.refractory(post)) continue;
          const double w = weights_[static_cast<std::size_t>(s)];
          if (wiring_.is_excitatory[static_cast<std::size_t>(syn.pre)]) {
            increments[post] += w;
            ledger_.note_increment(syn.post, w);
          } else {
            increments[post] -= w;
          }
        }
      population_.step(increments, dt, spiked);
      prev_spikers_.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (spiked[j]) {
          prev_spikers_.push_back(static_cast<int>(j));
          ledger_.on_spike(static_cast<int>(j), t, weights_,
                           cfg_.plasticity_enabled);
          if (cfg_.record_raster)
            raster.channels[j].push_back((t - t_base) / 1000.0);
        }
    }
    return raster;
  }

 private:
  const std::vector<int>& input_by_channel(std::size_t ch) {
    if (input_by_channel_.empty()) {
      input_by_channel_.resize(static_cast<std::size_t>(wiring_.n_input_channels));
      for (std::size_t s = 0; s < wiring_.input.size(); ++s)
        input_by_channel_[static_cast<std::size_t>(wiring_.input[s].channel)]
            .push_back(static_cast<int>(s));
    }
    return input_by_channel_[ch];
  }

  Wiring wiring_;
  Population population_;
  BranchingLedger ledger_;
  SimulationConfig cfg_;
  std::vector<double> weights_;
  std::vector<std::vector<int>> out_syn_;
  std::vector<std::vector<int>> input_by_channel_;
  std::vector<int> prev_spikers_;
};

struct TrialRaster {
  Raster raster;
  int label;
  int session;
  int trial_id;
};

// Encodes and runs every trial in deterministic order. State resets
// between trials when configured; plastic weights persist across the
// whole pass.
inline std::vector<TrialRaster> run_dataset(
    const TrialSet& ts, const EncoderParams& enc, Engine& engine,
    const SimulationConfig& cfg,
    const std::function<void(const TrialRaster&, const Engine&)>& on_trial =
        nullptr) {
  std::vector<TrialRaster> out;
  out.reserve(ts.trials.size());
  for (const auto& t : ts.trials) {
    const EventStream es = encode_trial(t, enc);
    Raster r = engine.run_trial(es, cfg.reset_between_trials);
    out.push_back({std::move(r), t.gesture, t.session_id, t.trial_id});
    if (on_trial) on_trial(out.back(), engine);
  }
  return out;
}

}  // namespace emgres
