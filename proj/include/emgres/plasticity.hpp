#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "emgres/common.hpp"
#include "emgres/topology.hpp"

namespace emgres {

// Branching-factor regulation parameters. Each excitatory neuron's local
// branching factor (postsynaptic spikes credited to one of its spikes) is
// driven toward target_branching by multiplicative updates on its outgoing
// weights.
struct CriticalParams {
  double learning_rate = 0.1;
  double target_branching = 1.0;
  double w_min = 0.0;
  // headroom matters: with the cap at the init range the branching fixed
  // point is unreachable and every weight pins to the bound
  double w_max = 2.0;
  double window_ms = 25.0;   // attribution window, ~max membrane tau

  void validate() const {
    require(learning_rate > 0 && learning_rate <= 1, "learning rate in (0, 1]");
    require(target_branching > 0, "target branching must be positive");
    require(w_max >= w_min && w_min >= 0,
            "weight bounds must satisfy 0 <= w_min <= w_max");
    require(window_ms > 0, "attribution window must be positive");
  }
};

// Multiplicative update toward the branching target, clamped to bounds.
// Applied to the outgoing excitatory weights of one neuron.
inline void apply_branching_update(std::vector<double>& weights,
                                   const std::vector<int>& outgoing_synapses,
                                   double branching, const CriticalParams& p) {
  const double factor = 1.0 + p.learning_rate * (p.target_branching - branching);
  for (int s : outgoing_synapses) {
    const auto idx = static_cast<std::size_t>(s);
    weights[idx] = std::clamp(weights[idx] * factor, p.w_min, p.w_max);
  }
}

// Online spike-causality ledger. A spike of neuron i opens an attribution
// window on each outgoing excitatory synapse; when the postsynaptic neuron
// j fires inside the window, i is credited c = w_ij / S_j, where S_j is
// the total excitatory increment j received since its own previous spike.
// The credits accumulated between two consecutive spikes of i form one
// generation and yield one branching estimate b_i.
class BranchingLedger {
 public:
  BranchingLedger(const Wiring& w, const CriticalParams& p) : params_(p) {
    params_.validate();
    const auto n = static_cast<std::size_t>(w.n_neurons());
    outgoing_exc_.resize(n);
    incoming_exc_.resize(n);
    pre_of_.resize(w.recurrent.size());
    for (std::size_t s = 0; s < w.recurrent.size(); ++s) {
      const auto& syn = w.recurrent[s];
      pre_of_[s] = syn.pre;
      if (!w.is_excitatory[static_cast<std::size_t>(syn.pre)]) continue;
      outgoing_exc_[static_cast<std::size_t>(syn.pre)].push_back(static_cast<int>(s));
      incoming_exc_[static_cast<std::size_t>(syn.post)].push_back(static_cast<int>(s));
    }
    window_open_.assign(w.recurrent.size(), -1.0);
    window_weight_.assign(w.recurrent.size(), 0.0);
    reset();
  }

  const CriticalParams& params() const { return params_; }

  const std::vector<int>& outgoing_excitatory(int neuron) const {
    return outgoing_exc_[static_cast<std::size_t>(neuron)];
  }

  // Clears spike history but keeps the wiring view. Used between trials.
  void reset() {
    std::fill(window_open_.begin(), window_open_.end(), -1.0);
    const std::size_t n = outgoing_exc_.size();
    accum_.assign(n, 0.0);
    s_exc_.assign(n, 0.0);
    has_generation_.assign(n, 0);
    last_estimate_.assign(n, -1.0);
  }

  // Excitatory increment actually applied to neuron j this step (input or
  // recurrent; increments dropped during refractory are not reported).
  void note_increment(int j, double amount) {
    s_exc_[static_cast<std::size_t>(j)] += amount;
  }

  // Resolve attribution windows into j at its spike time.
  void on_post_spike(int j, double t_ms) {
    const double s_total = s_exc_[static_cast<std::size_t>(j)];
    for (int s : incoming_exc_[static_cast<std::size_t>(j)]) {
      const auto idx = static_cast<std::size_t>(s);
      const double open = window_open_[idx];
      if (open < 0) continue;
      if (t_ms <= open) continue;  // increment has not arrived yet
      if (t_ms - open <= params_.window_ms && s_total > 0)
        accum_[static_cast<std::size_t>(pre_of_[idx])] +=
            window_weight_[idx] / s_total;
      window_open_[idx] = -1.0;
    }
  }

  // Close i's previous generation; returns its branching estimate, or
  // nothing on i's first spike or when i has no outgoing excitatory
  // synapses. Call after on_post_spike(i, ...).
  std::optional<double> close_generation(int i) {
    const auto idx = static_cast<std::size_t>(i);
    if (outgoing_exc_[idx].empty()) return std::nullopt;
    std::optional<double> b;
    if (has_generation_[idx]) {
      b = accum_[idx];
      last_estimate_[idx] = *b;
    }
    accum_[idx] = 0.0;
    has_generation_[idx] = 1;
    return b;
  }

  // Open a fresh window on every outgoing excitatory synapse of i; a
  // still-open window from i's previous spike restarts and its pending
  // contribution counts as zero.
  void on_pre_spike(int i, double t_ms, const std::vector<double>& weights) {
    for (int s : outgoing_exc_[static_cast<std::size_t>(i)]) {
      const auto idx = static_cast<std::size_t>(s);
      window_open_[idx] = t_ms;
      window_weight_[idx] = weights[idx];
    }
    s_exc_[static_cast<std::size_t>(i)] = 0.0;
  }

  // Engine entry point for a spike of neuron i at t_ms. Resolves incoming
  // windows, closes the previous generation (updating weights when
  // update_weights is set), and opens the next generation.
  void on_spike(int i, double t_ms, std::vector<double>& weights,
                bool update_weights) {
    on_post_spike(i, t_ms);
    if (auto b = close_generation(i)) {
      if (update_weights)
        apply_branching_update(weights,
                               outgoing_exc_[static_cast<std::size_t>(i)], *b,
                               params_);
      if (log_generations_) generation_log_.push_back({i, *b});
    }
    on_pre_spike(i, t_ms, weights);
  }

  // Most recent resolved branching estimate per neuron (-1 when none).
  const std::vector<double>& last_estimates() const { return last_estimate_; }

  void set_generation_logging(bool on) { log_generations_ = on; }
  const std::vector<std::pair<int, double>>& generation_log() const {
    return generation_log_;
  }

 private:
  CriticalParams params_;
  std::vector<std::vector<int>> outgoing_exc_, incoming_exc_;
  std::vector<int> pre_of_;
  std::vector<double> window_open_, window_weight_;
  std::vector<double> accum_, s_exc_, last_estimate_;
  std::vector<std::uint8_t> has_generation_;
  bool log_generations_ = false;
  std::vector<std::pair<int, double>> generation_log_;
};

// One resolved branching generation: neuron, spike time opening the
// generation, and the total credit attributed to that spike.
struct BranchingGeneration {
  int neuron;
  double t_open_ms;
  double contribution;
};

// Offline replay of the attribution rule over a recorded raster with
// frozen weights. Recurrent spikes are delivered one step late; input
// events (when given) are delivered in their own step and count toward
// S_j like any excitatory increment. Trailing generations are truncated
// at the raster end. Independent of the engine's online ledger path.
inline std::vector<BranchingGeneration> attribute_branching(
    const Raster& raster, const Wiring& wiring,
    const std::vector<double>& weights, double window_ms, double dt_ms = 1.0,
    double refractory_ms = 0.0, const EventStream* input = nullptr) {
  if (raster.total_spikes() == 0)
    throw NumericError("branching measure undefined on an empty raster");
  const int n = wiring.n_neurons();
  require(static_cast<int>(raster.channels.size()) == n,
          "raster / wiring size mismatch");
  const auto n_steps =
      static_cast<long>(std::lround(raster.duration_s * 1000.0 / dt_ms));

  std::vector<std::vector<long>> spike_steps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (double t : raster.channels[static_cast<std::size_t>(i)])
      spike_steps[static_cast<std::size_t>(i)].push_back(
          std::lround(t * 1000.0 / dt_ms));

  // excitatory recurrent adjacency only: inhibitory increments do not
  // count toward S and inhibitory neurons carry no branching estimate
  std::vector<std::vector<int>> out_exc(static_cast<std::size_t>(n)),
      in_exc(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < wiring.recurrent.size(); ++s) {
    const auto& syn = wiring.recurrent[s];
    if (!wiring.is_excitatory[static_cast<std::size_t>(syn.pre)]) continue;
    out_exc[static_cast<std::size_t>(syn.pre)].push_back(static_cast<int>(s));
    in_exc[static_cast<std::size_t>(syn.post)].push_back(static_cast<int>(s));
  }
  std::vector<std::vector<const InputSynapse*>> input_by_channel;
  std::vector<std::size_t> input_cursor;
  if (input) {
    input_by_channel.resize(static_cast<std::size_t>(wiring.n_input_channels));
    for (const auto& syn : wiring.input)
      input_by_channel[static_cast<std::size_t>(syn.channel)].push_back(&syn);
    input_cursor.assign(input->channels.size(), 0);
  }

  std::vector<double> window_open(wiring.recurrent.size(), -1.0);
  std::vector<double> s_exc(static_cast<std::size_t>(n), 0.0);
  std::vector<double> accum(static_cast<std::size_t>(n), 0.0);
  std::vector<double> gen_open(static_cast<std::size_t>(n), -1.0);
  std::vector<double> last_spike(static_cast<std::size_t>(n), -1e18);
  std::vector<std::size_t> cursor(static_cast<std::size_t>(n), 0);
  std::vector<BranchingGeneration> generations;

  const auto refractory_at = [&](int j, double t_ms) {
    return t_ms < last_spike[static_cast<std::size_t>(j)] + dt_ms + refractory_ms;
  };

  std::vector<int> prev_spikers, cur_spikers;
  for (long step = 0; step < n_steps; ++step) {
    const double t = static_cast<double>(step) * dt_ms;
    // deliveries: input events of this step, recurrent spikes of last step
    if (input) {
      for (std::size_t ch = 0; ch < input->channels.size(); ++ch) {
        const auto& times = input->channels[ch];
        auto& ic = input_cursor[ch];
        while (ic < times.size() &&
               static_cast<long>(std::floor(times[ic] * 1000.0 / dt_ms)) == step) {
          for (const auto* syn : input_by_channel[ch])
            if (!refractory_at(syn->post, t))
              s_exc[static_cast<std::size_t>(syn->post)] += syn->weight;
          ++ic;
        }
      }
    }
    for (int i : prev_spikers)
      for (int s : out_exc[static_cast<std::size_t>(i)]) {
        const auto& syn = wiring.recurrent[static_cast<std::size_t>(s)];
        if (!refractory_at(syn.post, t))
          s_exc[static_cast<std::size_t>(syn.post)] +=
              weights[static_cast<std::size_t>(s)];
      }
    // spikes this step, in neuron index order (matches the engine)
    cur_spikers.clear();
    for (int j = 0; j < n; ++j) {
      auto& c = cursor[static_cast<std::size_t>(j)];
      const auto& ss = spike_steps[static_cast<std::size_t>(j)];
      if (c < ss.size() && ss[c] == step) {
        cur_spikers.push_back(j);
        ++c;
      }
    }
    for (int j : cur_spikers) {
      const auto ji = static_cast<std::size_t>(j);
      const double s_total = s_exc[ji];
      for (int s : in_exc[ji]) {
        const auto si = static_cast<std::size_t>(s);
        const double open = window_open[si];
        if (open < 0) continue;
        if (t <= open) continue;
        if (t - open <= window_ms && s_total > 0)
          accum[static_cast<std::size_t>(wiring.recurrent[si].pre)] +=
              weights[si] / s_total;
        window_open[si] = -1.0;
      }
      if (!out_exc[ji].empty()) {
        if (gen_open[ji] >= 0)
          generations.push_back({j, gen_open[ji], accum[ji]});
        accum[ji] = 0.0;
        gen_open[ji] = t;
        for (int s : out_exc[ji]) window_open[static_cast<std::size_t>(s)] = t;
      }
      s_exc[ji] = 0.0;
      last_spike[ji] = t;
    }
    prev_spikers = cur_spikers;
  }
  // trailing generations truncated at raster end
  for (int j = 0; j < n; ++j) {
    const auto ji = static_cast<std::size_t>(j);
    if (gen_open[ji] >= 0) generations.push_back({j, gen_open[ji], accum[ji]});
  }
  return generations;
}

// Mean branching over all generations opened in [t_start_ms, t_end_ms).
inline double measure_global_branching(
    const Raster& raster, const Wiring& wiring,
    const std::vector<double>& weights, double window_ms, double dt_ms = 1.0,
    double refractory_ms = 0.0, const EventStream* input = nullptr,
    double t_start_ms = 0.0,
    double t_end_ms = std::numeric_limits<double>::infinity()) {
  const auto gens = attribute_branching(raster, wiring, weights, window_ms,
                                        dt_ms, refractory_ms, input);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& g : gens)
    if (g.t_open_ms >= t_start_ms && g.t_open_ms < t_end_ms) {
      sum += g.contribution;
      ++count;
    }
  if (count == 0)
    throw NumericError("no branching generations in the measurement window");
  return sum / static_cast<double>(count);
}

}  // namespace emgres
