#include <catch2/catch_amalgamated.hpp>
#include <emgres/topology.hpp>
#include <filesystem>
#include <set>

using namespace emgres;

TEST_CASE("build_layout sizes") {
  ReservoirSpec spec;
  std::vector<std::array<double, 3>> pos;
  std::vector<int> col;

  build_layout(spec, pos, col);  // macro [2,5,1], mini [4,4,2]
  REQUIRE(pos.size() == 320);
  REQUIRE(col.size() == 320);

  spec.macro_shape = {2, 2, 2};
  build_layout(spec, pos, col);
  REQUIRE(pos.size() == 256);

  spec.macro_shape = {1, 1, 1};
  spec.mini_shape = {1, 1, 1};
  build_layout(spec, pos, col);
  REQUIRE(pos.size() == 1);
  REQUIRE(pos[0] == std::array<double, 3>{0.0, 0.0, 0.0});
}

TEST_CASE("assign_types places the exact excitatory count") {
  Rng rng(4);
  const auto t80 = assign_types(320, 0.8, rng);
  int n_exc = 0;
  for (auto b : t80) n_exc += b;
  REQUIRE(n_exc == 256);

  Rng rng2(4);
  const auto t100 = assign_types(320, 1.0, rng2);
  for (auto b : t100) REQUIRE(b == 1);

  Rng a(11), b(11);
  REQUIRE(assign_types(100, 0.8, a) == assign_types(100, 0.8, b));
}

TEST_CASE("wire_inputs count, ranges, and uniqueness") {
  Rng rng(8);
  const auto in = wire_inputs(kInputChannels, 320, 1161, 0.15, 1.0, rng);
  REQUIRE(in.size() == 174);  // round(0.15 * 1161)
  std::set<std::pair<int, int>> seen;
  for (const auto& s : in) {
    REQUIRE(s.channel >= 0);
    REQUIRE(s.channel < 16);
    REQUIRE(s.post >= 0);
    REQUIRE(s.post < 320);
    REQUIRE(s.weight >= 0.0);
    REQUIRE(s.weight <= 1.0);
    REQUIRE(seen.insert({s.channel, s.post}).second);
  }

  Rng rng2(8);
  REQUIRE(wire_inputs(16, 320, 1161, 0.0, 1.0, rng2).empty());
}

TEST_CASE("recurrent edge count is calibrated to the target") {
  ReservoirSpec spec;
  std::vector<std::array<double, 3>> pos;
  std::vector<int> col;
  build_layout(spec, pos, col);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto edges = connect_recurrent(pos, spec, rng);
    total += static_cast<double>(edges.size());
    for (const auto& e : edges) {
      REQUIRE(e.pre != e.post);
      REQUIRE(e.weight >= 0.0);
      REQUIRE(e.weight <= 0.25);
    }
  }
  const double mean = total / 20.0;
  REQUIRE(mean > 1161.0 * 0.9);
  REQUIRE(mean < 1161.0 * 1.1);
}

TEST_CASE("two neurons with target 2 connect both ways") {
  ReservoirSpec spec;
  spec.target_recurrent = 2;
  const std::vector<std::array<double, 3>> pos{{0, 0, 0}, {1, 0, 0}};
  Rng rng(3);
  const auto edges = connect_recurrent(pos, spec, rng);
  REQUIRE(edges.size() == 2);  // calibration saturates p at 1
}

TEST_CASE("infeasible recurrent target is rejected") {
  ReservoirSpec spec;
  spec.target_recurrent = 100;
  const std::vector<std::array<double, 3>> pos{{0, 0, 0}, {1, 0, 0}};
  Rng rng(3);
  REQUIRE_THROWS_AS(connect_recurrent(pos, spec, rng), std::invalid_argument);
}

TEST_CASE("connection probability decreases with distance") {
  // same-minicolumn pairs should connect far more often than pairs in
  // different macrocolumn cells
  ReservoirSpec spec;
  std::size_t same_hits = 0, same_pairs = 0, far_hits = 0, far_pairs = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    ReservoirSpec s = spec;
    s.seed = seed;
    const Wiring w = build_wiring(s);
    std::set<std::pair<int, int>> connected;
    for (const auto& e : w.recurrent) connected.insert({e.pre, e.post});
    const int n = w.n_neurons();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const bool same = w.minicolumn_id[static_cast<std::size_t>(i)] ==
                          w.minicolumn_id[static_cast<std::size_t>(j)];
        const bool hit = connected.count({i, j}) > 0;
        if (same) {
          ++same_pairs;
          same_hits += hit;
        } else {
          ++far_pairs;
          far_hits += hit;
        }
      }
  }
  const double p_same = static_cast<double>(same_hits) / static_cast<double>(same_pairs);
  const double p_far = static_cast<double>(far_hits) / static_cast<double>(far_pairs);
  REQUIRE(p_same > p_far);
}

TEST_CASE("build_wiring is deterministic and self-consistent") {
  ReservoirSpec spec;
  spec.seed = 42;
  const Wiring a = build_wiring(spec);
  const Wiring b = build_wiring(spec);
  REQUIRE(a.is_excitatory == b.is_excitatory);
  REQUIRE(a.recurrent.size() == b.recurrent.size());
  for (std::size_t i = 0; i < a.recurrent.size(); ++i) {
    REQUIRE(a.recurrent[i].pre == b.recurrent[i].pre);
    REQUIRE(a.recurrent[i].post == b.recurrent[i].post);
    REQUIRE(a.recurrent[i].weight == b.recurrent[i].weight);
  }
  REQUIRE(a.input.size() == b.input.size());
  REQUIRE(a.input.size() == 174);

  // no duplicate recurrent pairs
  std::set<std::pair<int, int>> pairs;
  for (const auto& e : a.recurrent)
    REQUIRE(pairs.insert({e.pre, e.post}).second);
}

TEST_CASE("wiring JSON round trip") {
  ReservoirSpec spec;
  spec.macro_shape = {1, 2, 1};
  spec.mini_shape = {2, 2, 1};
  spec.target_recurrent = 20;
  spec.seed = 7;
  const Wiring w = build_wiring(spec);
  const auto path =
      (std::filesystem::temp_directory_path() / "emgres_wiring.json").string();
  save_wiring(w, path);
  const Wiring back = load_wiring(path);
  REQUIRE(back.n_neurons() == w.n_neurons());
  REQUIRE(back.is_excitatory == w.is_excitatory);
  REQUIRE(back.recurrent.size() == w.recurrent.size());
  for (std::size_t i = 0; i < w.recurrent.size(); ++i) {
    REQUIRE(back.recurrent[i].pre == w.recurrent[i].pre);
    REQUIRE(back.recurrent[i].post == w.recurrent[i].post);
    REQUIRE(back.recurrent[i].weight == w.recurrent[i].weight);
  }
  REQUIRE(back.input.size() == w.input.size());
  std::filesystem::remove(path);
}
