#include "tokgossip/engine.hpp"

#include <cmath>
#include <sstream>

namespace tokgossip {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
  return mix_seed(mix_seed(master_seed) ^ mix_seed(stream_id + 0x632be59bd9b4e019ULL));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      engine_(derive_stream_seed(master_seed, stream_id)) {}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw UsageError("uniform_index: empty range");
  // Lemire, "Fast Random Integer Generation in an Interval" (2019).
  std::uint64_t x = engine_();
  u128 m = static_cast<u128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = engine_();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw UsageError("exponential: rate must be positive");
  return -std::log1p(-uniform01()) / rate;
}

RngStream RngStream::split(std::uint64_t child_id) const {
  return RngStream(derive_stream_seed(master_seed_, stream_id_), child_id);
}

void validate(const ClockMode& mode) {
  if (const auto* d = std::get_if<SynchronousDiscrete>(&mode)) {
    require(d->lazy_prob >= 0.0 && d->lazy_prob < 1.0,
            "lazy_prob must lie in [0, 1); lazy_prob = 1 freezes every token");
  }
}

bool is_continuous(const ClockMode& mode) noexcept {
  return std::holds_alternative<ContinuousClock>(mode);
}

double lazy_prob(const ClockMode& mode) noexcept {
  if (const auto* d = std::get_if<SynchronousDiscrete>(&mode)) return d->lazy_prob;
  return 0.0;
}

std::string describe(const ClockMode& mode) {
  return is_continuous(mode) ? "continuous" : "discrete";
}

void SimClock::advance(double dt) {
  if (!(dt >= 0.0)) throw SimulationError("SimClock: negative time increment");
  t_ += dt;
}

void SimClock::set(double t) {
  if (t < t_) throw SimulationError("SimClock: time may not move backwards");
  t_ = t;
}

double next_firing(std::size_t active_count, RngStream& rng) {
  if (active_count == 0) {
    throw SimulationError("next_firing: no active clocks (termination must be detected first)");
  }
  return rng.exponential(static_cast<double>(active_count));
}

}  // namespace tokgossip
