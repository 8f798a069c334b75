#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace emgres {

// Error categories map to distinct CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic RNG wrapper. All randomness in the library flows through
// this class so that a (seed, call-order) pair fully determines the draw
// sequence on every platform. The mapping from raw 64-bit output to
// doubles/ints is hand-rolled; std distributions are not portable across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix(seed)) {}

  std::uint64_t next_u64() {
    // xorshift64* step on a splitmix-initialized state
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n)
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  // Derive an independent stream, e.g. one per trial or per fold.
  Rng derive(std::uint64_t stream) const {
    return Rng(splitmix(state_ ^ (0x9E3779B97F4A7C15ULL * (stream + 1))));
  }

 private:
  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return z ? z : 0x106689D45497FDB5ULL;
  }

  std::uint64_t state_;
};

// A set of per-channel spike time lists (seconds, increasing per channel).
// Used both for encoder output (16 UP/DN channels) and reservoir rasters
// (one "channel" per neuron).
struct SpikeTrains {
  std::vector<std::vector<double>> channels;
  double duration_s = 0.0;

  std::size_t n_channels() const { return channels.size(); }

  std::size_t total_spikes() const {
    std::size_t n = 0;
    for (const auto& c : channels) n += c.size();
    return n;
  }
};

using EventStream = SpikeTrains;
using Raster = SpikeTrains;

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// FNV-1a, used for config hashes and import manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) {
  return fnv1a(s.data(), s.size());
}

}  // namespace emgres
