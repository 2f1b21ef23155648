#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tokgossip/error.hpp"

namespace tokgossip {

using NodeId = std::uint32_t;

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed of stream `stream_id` under `master_seed`. Distinct ids give
/// decorrelated generator states; the mapping is part of the reproducibility
/// contract and must not change.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

/// A reproducible random stream.
///
/// Draws are produced by mt19937_64 seeded from (master seed, stream id).
/// The variate transforms are implemented here rather than through
/// <random> distributions, whose output is implementation-defined, so a
/// stream yields the same values with any standard library.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64";

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Exponential variate with the given rate (mean 1/rate).
  double exponential(double rate);

  bool bernoulli(double p) { return uniform01() < p; }

  /// Child stream for a sub-task; deterministic in (this stream's identity, child id).
  RngStream split(std::uint64_t child_id) const;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

template <class T>
void shuffle(std::span<T> items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(items[i - 1], items[j]);
  }
}

struct ContinuousClock {};
struct SynchronousDiscrete {
  double lazy_prob = 0.5;
};

/// Continuous time with per-node unit-rate Poisson clocks, or synchronous
/// rounds in which every token moves (or lazily holds) simultaneously.
using ClockMode = std::variant<ContinuousClock, SynchronousDiscrete>;

void validate(const ClockMode& mode);
bool is_continuous(const ClockMode& mode) noexcept;
double lazy_prob(const ClockMode& mode) noexcept;
std::string describe(const ClockMode& mode);

/// Simulation time: mean-interarrival units in continuous mode, round index
/// in discrete mode. Never decreases.
class SimClock {
 public:
  double now() const noexcept { return t_; }
  void advance(double dt);
  void set(double t);

 private:
  double t_ = 0.0;
};

/// Time to the next tick among `active_count` unit-rate clocks, i.e. an
/// Exponential(active_count) variate. Inactive clocks are never sampled.
double next_firing(std::size_t active_count, RngStream& rng);

template <class T>
const T& pick_uniform(std::span<const T> items, RngStream& rng) {
  if (items.empty()) throw UsageError("pick_uniform: empty list");
  return items[static_cast<std::size_t>(rng.uniform_index(items.size()))];
}

}  // namespace tokgossip
