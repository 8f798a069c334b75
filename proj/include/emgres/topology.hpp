#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <vector>

#include <json.hpp>

#include "emgres/common.hpp"

namespace emgres {

inline constexpr int kInputChannels = 16;

// Reservoir geometry and wiring targets. Neurons live on an integer
// lattice of minicolumns (one per macrocolumn cell); connection
// probability between two neurons falls off with euclidean distance as
// a Gaussian kernel whose magnitude is calibrated to hit target_recurrent
// expected edges.
struct ReservoirSpec {
  std::array<int, 3> macro_shape{2, 5, 1};
  std::array<int, 3> mini_shape{4, 4, 2};
  double exc_fraction = 0.8;
  int target_recurrent = 1161;
  double input_fraction = 0.15;
  double lambda = 2.0;  // distance kernel scale, lattice units
  double w_recurrent_max = 0.25;
  double w_input_max = 1.0;
  std::uint64_t seed = 0;

  int n_neurons() const {
    return macro_shape[0] * macro_shape[1] * macro_shape[2] * mini_shape[0] *
           mini_shape[1] * mini_shape[2];
  }

  void validate() const {
    for (int d : macro_shape) require(d >= 1, "macro shape dims must be >= 1");
    for (int d : mini_shape) require(d >= 1, "mini shape dims must be >= 1");
    require(exc_fraction > 0 && exc_fraction <= 1, "exc fraction in (0, 1]");
    require(input_fraction >= 0, "input fraction must be nonnegative");
    require(lambda > 0, "distance kernel scale must be positive");
  }
};

struct Synapse {
  int pre;
  int post;
  double weight;  // stored magnitude >= 0; sign comes from the pre type
};

struct InputSynapse {
  int channel;
  int post;
  double weight;  // always excitatory
};

struct Wiring {
  std::vector<std::array<double, 3>> positions;
  std::vector<int> minicolumn_id;
  std::vector<std::uint8_t> is_excitatory;
  std::vector<Synapse> recurrent;
  std::vector<InputSynapse> input;
  int n_input_channels = kInputChannels;

  int n_neurons() const { return static_cast<int>(positions.size()); }
};

// Integer lattice positions: minicolumn-local offset plus macro-cell offset
// scaled by the minicolumn shape. Neuron order is macro-major.
inline void build_layout(const ReservoirSpec& spec,
                         std::vector<std::array<double, 3>>& positions,
                         std::vector<int>& minicolumn_id) {
  spec.validate();
  positions.clear();
  minicolumn_id.clear();
  const auto& M = spec.macro_shape;
  const auto& m = spec.mini_shape;
  int column = 0;
  for (int mx = 0; mx < M[0]; ++mx)
    for (int my = 0; my < M[1]; ++my)
      for (int mz = 0; mz < M[2]; ++mz) {
        for (int x = 0; x < m[0]; ++x)
          for (int y = 0; y < m[1]; ++y)
            for (int z = 0; z < m[2]; ++z) {
              positions.push_back({static_cast<double>(mx * m[0] + x),
                                   static_cast<double>(my * m[1] + y),
                                   static_cast<double>(mz * m[2] + z)});
              minicolumn_id.push_back(column);
            }
        ++column;
      }
}

namespace detail {

inline double sq_dist(const std::array<double, 3>& a,
                      const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Expected directed edge count for kernel magnitude C, probabilities
// saturating at 1.
inline double expected_edges(const std::vector<double>& kernel, double c) {
  double sum = 0.0;
  for (double k : kernel) sum += std::min(1.0, c * k);
  return sum;
}

}  // namespace detail

// Distance-based recurrent connectivity: each ordered pair (i, j), i != j,
// connects with probability min(1, C * exp(-(d/lambda)^2)). C is found by
// bisection so the expected edge count equals target_recurrent. Weights
// are uniform in [0, w_recurrent_max].
inline std::vector<Synapse> connect_recurrent(
    const std::vector<std::array<double, 3>>& positions,
    const ReservoirSpec& spec, Rng& rng) {
  const int n = static_cast<int>(positions.size());
  require(n >= 2, "need at least 2 neurons for recurrent wiring");
  const double max_edges = static_cast<double>(n) * (n - 1);
  if (spec.target_recurrent > max_edges)
    throw std::invalid_argument("recurrent target exceeds n*(n-1)");
  const double inv_l2 = 1.0 / (spec.lambda * spec.lambda);
  std::vector<double> kernel;
  kernel.reserve(static_cast<std::size_t>(max_edges));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        kernel.push_back(std::exp(-detail::sq_dist(positions[static_cast<std::size_t>(i)],
                                                   positions[static_cast<std::size_t>(j)]) *
                                  inv_l2));
  // bracket then bisect on the kernel magnitude
  double lo = 0.0, hi = 1.0;
  while (detail::expected_edges(kernel, hi) < spec.target_recurrent &&
         hi < 1e12)
    hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::expected_edges(kernel, mid) < spec.target_recurrent)
      lo = mid;
    else
      hi = mid;
  }
  const double c = hi;
  std::vector<Synapse> edges;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = std::min(1.0, c * kernel[k++]);
      if (rng.uniform() < p)
        edges.push_back({i, j, rng.uniform(0.0, spec.w_recurrent_max)});
    }
  return edges;
}

// Exactly round(n * exc_fraction) excitatory neurons, uniformly placed.
inline std::vector<std::uint8_t> assign_types(int n, double exc_fraction,
                                              Rng& rng) {
  require(n >= 1, "population must be nonempty");
  const int n_exc = static_cast<int>(std::lround(n * exc_fraction));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[rng.uniform_index(static_cast<std::size_t>(i) + 1)]);
  std::vector<std::uint8_t> is_exc(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n_exc; ++i) is_exc[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return is_exc;
}

// Random (channel, neuron) pairs without duplicates; count is
// round(input_fraction * n_recurrent). Input synapses are excitatory
// regardless of UP/DN channel or target type.
inline std::vector<InputSynapse> wire_inputs(int n_channels, int n_neurons,
                                             int n_recurrent,
                                             double input_fraction,
                                             double w_input_max, Rng& rng) {
  require(n_recurrent >= 1, "recurrent wiring must come first");
  const int count = static_cast<int>(std::lround(input_fraction * n_recurrent));
  if (count > n_channels * n_neurons)
    throw std::invalid_argument("input connection count exceeds channel x neuron pairs");
  std::vector<InputSynapse> input;
  std::set<std::pair<int, int>> used;
  while (static_cast<int>(input.size()) < count) {
    const int ch = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_channels)));
    const int post = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_neurons)));
    if (!used.insert({ch, post}).second) continue;
    input.push_back({ch, post, rng.uniform(0.0, w_input_max)});
  }
  return input;
}

// Full wiring from a spec: layout, types, recurrent edges, input edges.
inline Wiring build_wiring(const ReservoirSpec& spec) {
  spec.validate();
  Wiring w;
  build_layout(spec, w.positions, w.minicolumn_id);
  Rng rng(spec.seed);
  w.is_excitatory = assign_types(w.n_neurons(), spec.exc_fraction, rng);
  w.recurrent = connect_recurrent(w.positions, spec, rng);
  // input count keys off the recurrent target, not the realized draw, so
  // every seed gets the same number of input synapses
  w.input = wire_inputs(kInputChannels, w.n_neurons(), spec.target_recurrent,
                        spec.input_fraction, spec.w_input_max, rng);
  w.n_input_channels = kInputChannels;
  return w;
}

inline nlohmann::json wiring_to_json(const Wiring& w) {
  nlohmann::json j;
  j["n_input_channels"] = w.n_input_channels;
  j["positions"] = w.positions;
  j["minicolumn_id"] = w.minicolumn_id;
  j["is_excitatory"] = w.is_excitatory;
  auto& rec = j["recurrent"] = nlohmann::json::array();
  for (const auto& s : w.recurrent) rec.push_back({s.pre, s.post, s.weight});
  auto& in = j["input"] = nlohmann::json::array();
  for (const auto& s : w.input) in.push_back({s.channel, s.post, s.weight});
  return j;
}

inline Wiring wiring_from_json(const nlohmann::json& j) {
  Wiring w;
  w.n_input_channels = j.at("n_input_channels");
  w.positions = j.at("positions").get<std::vector<std::array<double, 3>>>();
  w.minicolumn_id = j.at("minicolumn_id").get<std::vector<int>>();
  w.is_excitatory = j.at("is_excitatory").get<std::vector<std::uint8_t>>();
  for (const auto& e : j.at("recurrent"))
    w.recurrent.push_back({e.at(0), e.at(1), e.at(2)});
  for (const auto& e : j.at("input"))
    w.input.push_back({e.at(0), e.at(1), e.at(2)});
  return w;
}

inline void save_wiring(const Wiring& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write wiring file: " + path);
  out << wiring_to_json(w).dump() << "\n";
}

inline Wiring load_wiring(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open wiring file: " + path);
  nlohmann::json j;
  in >> j;
  return wiring_from_json(j);
}

}  // namespace emgres
