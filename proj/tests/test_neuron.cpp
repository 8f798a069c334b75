#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <emgres/neuron.hpp>

using namespace emgres;

namespace {

Population single(double tau_ms = 20.0) {
  NeuronParams p;
  p.tau_ms = tau_ms;
  return Population({p});
}

}  // namespace

TEST_CASE("membrane decay matches the closed form") {
  Population pop = single(20.0);
  std::vector<std::uint8_t> spiked;
  pop.step(std::vector<double>{0.9}, 1.0, spiked);  // below vth0 = 1.0
  const double v_start = pop.v()[0];
  REQUIRE(v_start == 0.9);
  for (int k = 0; k < 20; ++k) pop.step(std::vector<double>{0.0}, 1.0, spiked);
  const double expect = 0.9 * std::exp(-1.0);
  REQUIRE(std::abs(pop.v()[0] - expect) / expect < 1e-9);
}

TEST_CASE("suprathreshold input fires and bumps the threshold") {
  Population pop = single();
  std::vector<std::uint8_t> spiked;
  pop.step(std::vector<double>{1.2}, 1.0, spiked);
  REQUIRE(spiked[0] == 1);
  REQUIRE(pop.v()[0] == 0.0);
  REQUIRE(pop.vth()[0] == Catch::Approx(1.1));
}

TEST_CASE("threshold decay matches the closed form") {
  NeuronParams p;
  p.refractory_ms = 0.0;  // isolate the vth dynamics
  Population pop({p});
  std::vector<std::uint8_t> spiked;
  pop.step(std::vector<double>{1.5}, 1.0, spiked);
  REQUIRE(spiked[0] == 1);
  REQUIRE(pop.vth()[0] == Catch::Approx(1.1));
  for (int k = 0; k < 50; ++k) pop.step(std::vector<double>{0.0}, 1.0, spiked);
  const double expect = 1.0 + 0.1 * std::exp(-1.0);  // tau_vth = 50 ms
  REQUIRE(std::abs(pop.vth()[0] - expect) / expect < 1e-9);
}

TEST_CASE("draw_population statistics and determinism") {
  const NeuronParams tmpl;
  const auto a = draw_population(320, tmpl, 77);
  const auto b = draw_population(320, tmpl, 77);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].tau_ms == b[i].tau_ms);

  const auto big = draw_population(10000, tmpl, 5);
  double mean = 0.0;
  for (const auto& p : big) {
    REQUIRE(p.tau_ms >= 15.0);
    REQUIRE(p.tau_ms <= 25.0);
    mean += p.tau_ms;
  }
  mean /= static_cast<double>(big.size());
  REQUIRE(mean > 19.8);
  REQUIRE(mean < 20.2);

  const auto one = draw_population(1, tmpl, 9);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].tau_ms >= 15.0);
  REQUIRE(one[0].tau_ms <= 25.0);
}

TEST_CASE("threshold never decays below its rest value") {
  Population pop = single();
  Rng rng(13);
  std::vector<std::uint8_t> spiked;
  for (int k = 0; k < 500; ++k) {
    pop.step(std::vector<double>{rng.uniform(0.0, 1.4)}, 1.0, spiked);
    REQUIRE(pop.vth()[0] >= 1.0 - 1e-12);
    REQUIRE(std::isfinite(pop.v()[0]));
  }
}

TEST_CASE("membrane is clamped at rest through the refractory period") {
  NeuronParams p;
  p.refractory_ms = 5.0;
  Population pop({p});
  std::vector<std::uint8_t> spiked;
  pop.step(std::vector<double>{2.0}, 1.0, spiked);
  REQUIRE(spiked[0] == 1);
  for (int k = 0; k < 5; ++k) {
    REQUIRE(pop.refractory(0));
    pop.step(std::vector<double>{2.0}, 1.0, spiked);  // input dropped
    REQUIRE(spiked[0] == 0);
    REQUIRE(pop.v()[0] == 0.0);
  }
  REQUIRE_FALSE(pop.refractory(0));
  pop.step(std::vector<double>{2.0}, 1.0, spiked);
  REQUIRE(spiked[0] == 1);
}

TEST_CASE("subthreshold response obeys superposition") {
  // impulse synapses with exponential leak are linear below threshold
  std::vector<double> in_a(40, 0.0), in_b(40, 0.0);
  in_a[3] = 0.2;
  in_a[17] = 0.1;
  in_b[8] = 0.15;
  in_b[30] = 0.05;
  std::vector<std::uint8_t> spiked;
  const auto run = [&](const std::vector<double>& drive) {
    Population pop = single(18.0);
    std::vector<double> vs;
    for (double x : drive) {
      pop.step(std::vector<double>{x}, 1.0, spiked);
      REQUIRE(spiked[0] == 0);
      vs.push_back(pop.v()[0]);
    }
    return vs;
  };
  std::vector<double> both(40);
  for (int k = 0; k < 40; ++k) both[static_cast<std::size_t>(k)] = in_a[static_cast<std::size_t>(k)] + in_b[static_cast<std::size_t>(k)];
  const auto va = run(in_a), vb = run(in_b), vab = run(both);
  for (std::size_t k = 0; k < va.size(); ++k)
    REQUIRE(vab[k] == Catch::Approx(va[k] + vb[k]).margin(1e-12));
}

TEST_CASE("inter-spike intervals are nondecreasing under constant drive") {
  Population pop = single();
  std::vector<std::uint8_t> spiked;
  std::vector<double> spike_times;
  for (int k = 0; k < 2000; ++k) {
    const double t = pop.t_now_ms();
    pop.step(std::vector<double>{0.3}, 1.0, spiked);
    if (spiked[0]) spike_times.push_back(t);
  }
  REQUIRE(spike_times.size() >= 4);
  // nondecreasing up to the 1 ms step quantization
  for (std::size_t k = 2; k < spike_times.size(); ++k) {
    const double isi_prev = spike_times[k - 1] - spike_times[k - 2];
    const double isi = spike_times[k] - spike_times[k - 1];
    REQUIRE(isi >= isi_prev - 1.0 - 1e-9);
  }
  const double first = spike_times[1] - spike_times[0];
  const double last = spike_times.back() - spike_times[spike_times.size() - 2];
  REQUIRE(last > first);
}

TEST_CASE("no spike can occur during the refractory period") {
  NeuronParams p;
  p.refractory_ms = 3.0;
  Population pop({p});
  Rng rng(21);
  std::vector<std::uint8_t> spiked;
  double last_spike = -1e9;
  for (int k = 0; k < 3000; ++k) {
    const double t = pop.t_now_ms();
    pop.step(std::vector<double>{rng.uniform(0.0, 2.5)}, 1.0, spiked);
    if (spiked[0]) {
      REQUIRE(t - last_spike >= 1.0 + p.refractory_ms - 1e-9);
      last_spike = t;
    }
  }
}
