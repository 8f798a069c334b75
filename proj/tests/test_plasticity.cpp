#include <catch2/catch_amalgamated.hpp>
#include <emgres/encoding.hpp>
#include <emgres/plasticity.hpp>
#include <emgres/reservoir.hpp>
#include <map>

using namespace emgres;

namespace {

// hand-built wiring: all-excitatory chain or fan-in graphs for ledger tests
Wiring tiny_wiring(int n, const std::vector<Synapse>& edges,
                   const std::vector<std::uint8_t>& exc) {
  Wiring w;
  for (int i = 0; i < n; ++i) {
    w.positions.push_back({static_cast<double>(i), 0.0, 0.0});
    w.minicolumn_id.push_back(0);
  }
  w.is_excitatory = exc;
  w.recurrent = edges;
  w.n_input_channels = kInputChannels;
  return w;
}

}  // namespace

TEST_CASE("branching update arithmetic") {
  CriticalParams p;  // lr 0.1, target 1, bounds [0, 0.3]
  std::vector<double> w{0.20};
  const std::vector<int> out{0};

  apply_branching_update(w, out, 1.0, p);
  REQUIRE(w[0] == 0.20);  // at target, no change

  apply_branching_update(w, out, 0.0, p);
  REQUIRE(w[0] == Catch::Approx(0.22));

  w[0] = 0.20;
  apply_branching_update(w, out, 3.0, p);
  REQUIRE(w[0] == Catch::Approx(0.16));
}

TEST_CASE("branching update clamps to the weight bounds") {
  CriticalParams p;
  p.w_max = 0.3;
  std::vector<double> w{0.29, 0.001};
  const std::vector<int> out{0, 1};
  for (int k = 0; k < 100; ++k) apply_branching_update(w, out, 0.0, p);
  REQUIRE(w[0] == 0.3);
  REQUIRE(w[1] <= 0.3);
  for (int k = 0; k < 2000; ++k) apply_branching_update(w, out, 10.0, p);
  REQUIRE(w[0] >= 0.0);
  REQUIRE(w[1] >= 0.0);
}

TEST_CASE("negative feedback direction") {
  CriticalParams p;
  std::vector<double> w{0.1, 0.2};
  const std::vector<int> out{0, 1};
  std::vector<double> w0 = w;
  apply_branching_update(w, out, 2.0, p);  // above target: decrease
  REQUIRE(w[0] < w0[0]);
  REQUIRE(w[1] < w0[1]);
  w = w0;
  apply_branching_update(w, out, 0.5, p);  // below target: increase
  REQUIRE(w[0] > w0[0]);
  REQUIRE(w[1] > w0[1]);
}

TEST_CASE("ledger credits a full spike to a solo driver") {
  // A -> B, B receives nothing else: c = w / S = 1
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  CriticalParams p;
  BranchingLedger ledger(w, p);
  ledger.set_generation_logging(true);
  std::vector<double> weights{0.2};

  ledger.on_spike(0, 0.0, weights, false);
  ledger.note_increment(1, 0.2);
  ledger.on_spike(1, 1.0, weights, false);
  ledger.on_spike(0, 10.0, weights, false);  // closes A's generation

  REQUIRE(ledger.generation_log().size() == 1);
  REQUIRE(ledger.generation_log()[0].first == 0);
  REQUIRE(ledger.generation_log()[0].second == Catch::Approx(1.0));
  REQUIRE(ledger.last_estimates()[0] == Catch::Approx(1.0));
}

TEST_CASE("equal co-drivers split the credit") {
  // A -> C and B -> C with equal weights: each gets 0.5
  const Wiring w = tiny_wiring(3, {{0, 2, 0.1}, {1, 2, 0.1}}, {1, 1, 1});
  CriticalParams p;
  BranchingLedger ledger(w, p);
  std::vector<double> weights{0.1, 0.1};

  ledger.on_spike(0, 0.0, weights, false);
  ledger.on_spike(1, 0.0, weights, false);
  ledger.note_increment(2, 0.1);
  ledger.note_increment(2, 0.1);
  ledger.on_spike(2, 1.0, weights, false);
  ledger.on_spike(0, 12.0, weights, false);
  ledger.on_spike(1, 12.0, weights, false);

  REQUIRE(ledger.last_estimates()[0] == Catch::Approx(0.5));
  REQUIRE(ledger.last_estimates()[1] == Catch::Approx(0.5));
}

TEST_CASE("expired windows contribute nothing") {
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  CriticalParams p;  // window 25 ms
  BranchingLedger ledger(w, p);
  std::vector<double> weights{0.2};

  ledger.on_spike(0, 0.0, weights, false);
  ledger.note_increment(1, 0.2);
  ledger.on_spike(1, 30.0, weights, false);  // 30 > 25: too late
  ledger.on_spike(0, 40.0, weights, false);
  REQUIRE(ledger.last_estimates()[0] == Catch::Approx(0.0));
}

TEST_CASE("a pre respike restarts its windows at zero credit") {
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  CriticalParams p;
  BranchingLedger ledger(w, p);
  ledger.set_generation_logging(true);
  std::vector<double> weights{0.2};

  ledger.on_spike(0, 0.0, weights, false);
  ledger.on_spike(0, 5.0, weights, false);  // B never fired: b = 0
  REQUIRE(ledger.generation_log().size() == 1);
  REQUIRE(ledger.generation_log()[0].second == Catch::Approx(0.0));

  ledger.note_increment(1, 0.2);
  ledger.on_spike(1, 6.0, weights, false);  // credited to the second window
  ledger.on_spike(0, 20.0, weights, false);
  REQUIRE(ledger.generation_log().size() == 2);
  REQUIRE(ledger.generation_log()[1].second == Catch::Approx(1.0));
}

TEST_CASE("neurons without outgoing excitatory synapses get no estimate") {
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  CriticalParams p;
  BranchingLedger ledger(w, p);
  std::vector<double> weights{0.2};
  ledger.on_spike(1, 0.0, weights, false);
  ledger.on_spike(1, 10.0, weights, false);
  REQUIRE(ledger.last_estimates()[1] == -1.0);  // never resolved
}

TEST_CASE("fixed point: estimates at target leave weights untouched") {
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  CriticalParams p;
  BranchingLedger ledger(w, p);
  std::vector<double> weights{0.2};
  // every generation resolves to exactly 1.0
  for (int k = 0; k < 20; ++k) {
    const double t = 30.0 * k;
    ledger.on_spike(0, t, weights, true);
    ledger.note_increment(1, weights[0]);
    ledger.on_spike(1, t + 1.0, weights, true);
  }
  REQUIRE(weights[0] == Catch::Approx(0.2));
}

TEST_CASE("inhibitory weights are never updated") {
  // neuron 0 inhibitory with an outgoing edge; the ledger must ignore it
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {0, 1});
  CriticalParams p;
  BranchingLedger ledger(w, p);
  std::vector<double> weights{0.2};
  for (int k = 0; k < 10; ++k)
    ledger.on_spike(0, 30.0 * k, weights, true);
  REQUIRE(weights[0] == 0.2);
  REQUIRE(ledger.outgoing_excitatory(0).empty());
}

TEST_CASE("offline measure: relay chain has branching one") {
  // 0 -> 1 -> 2, every spike of i triggers i+1 one step later
  const Wiring w =
      tiny_wiring(3, {{0, 1, 0.2}, {1, 2, 0.2}}, {1, 1, 1});
  const std::vector<double> weights{0.2, 0.2};
  Raster raster;
  raster.duration_s = 0.1;
  raster.channels.resize(3);
  for (int k = 0; k < 3; ++k) {
    const double t0 = 0.030 * k;
    raster.channels[0].push_back(t0);
    raster.channels[1].push_back(t0 + 0.001);
    raster.channels[2].push_back(t0 + 0.002);
  }
  const auto gens = attribute_branching(raster, w, weights, 25.0);
  std::map<int, std::vector<double>> by_neuron;
  for (const auto& g : gens) by_neuron[g.neuron].push_back(g.contribution);
  // closed generations (all but the trailing one) must be exactly 1
  for (int i : {0, 1}) {
    REQUIRE(by_neuron[i].size() == 3);
    for (std::size_t k = 0; k + 1 < by_neuron[i].size(); ++k)
      REQUIRE(by_neuron[i][k] == Catch::Approx(1.0));
  }
  REQUIRE(by_neuron.count(2) == 0);  // no outgoing excitatory synapses
}

TEST_CASE("offline measure: a single consequence-free spike scores zero") {
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  const std::vector<double> weights{0.2};
  Raster raster;
  raster.duration_s = 0.05;
  raster.channels.resize(2);
  raster.channels[0].push_back(0.001);
  REQUIRE(measure_global_branching(raster, w, weights, 25.0) ==
          Catch::Approx(0.0));
}

TEST_CASE("offline measure rejects an empty raster") {
  const Wiring w = tiny_wiring(2, {{0, 1, 0.2}}, {1, 1});
  Raster raster;
  raster.duration_s = 0.05;
  raster.channels.resize(2);
  REQUIRE_THROWS_AS(measure_global_branching(raster, w, {0.2}, 25.0),
                    NumericError);
}

TEST_CASE("online ledger and offline replay agree exactly") {
  // frozen weights, real engine dynamics, random input
  ReservoirSpec spec;
  spec.macro_shape = {1, 2, 1};
  spec.mini_shape = {2, 2, 1};
  spec.target_recurrent = 30;
  spec.seed = 17;
  const Wiring wiring = build_wiring(spec);
  const auto params = draw_population(
      static_cast<std::size_t>(wiring.n_neurons()), NeuronParams{}, 23);

  SimulationConfig cfg;
  cfg.plasticity_enabled = false;  // freeze weights for replayability
  Engine engine(wiring, params, CriticalParams{}, cfg);
  engine.mutable_ledger().set_generation_logging(true);

  const EventStream input = poisson_events(kInputChannels, 120.0, 5.0, 3);
  const Raster raster = engine.run_trial(input);
  REQUIRE(raster.total_spikes() > 10);

  const auto gens =
      attribute_branching(raster, wiring, engine.recurrent_weights(), 25.0,
                          1.0, 1.0, &input);
  // offline per-neuron sequences, trailing (unclosed) generation dropped
  std::map<int, std::vector<double>> offline;
  for (const auto& g : gens) offline[g.neuron].push_back(g.contribution);
  std::map<int, std::vector<double>> online;
  for (const auto& [neuron, b] : engine.ledger().generation_log())
    online[neuron].push_back(b);

  for (auto& [neuron, seq] : offline) {
    REQUIRE_FALSE(seq.empty());
    seq.pop_back();  // the generation still open at raster end
    const auto it = online.find(neuron);
    if (seq.empty()) {
      REQUIRE((it == online.end() || it->second.empty()));
      continue;
    }
    REQUIRE(it != online.end());
    REQUIRE(it->second.size() == seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k)
      REQUIRE(it->second[k] == Catch::Approx(seq[k]).margin(1e-12));
  }
}
