#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "tokgossip/experiments.hpp"

namespace tokgossip::experiments {

GossipKEstimate measure_gossip_K(const Graph& g, const GossipMatrix& p, double eps,
                                 std::span<const double> z0, std::size_t trials,
                                 std::uint64_t seed, std::uint64_t max_messages,
                                 unsigned messages_per_exchange, std::size_t jobs) {
  if (!(eps > 0.0 && eps < 1.0)) throw UsageError("measure_gossip_K: eps must lie in (0, 1)");
  if (trials == 0) throw UsageError("measure_gossip_K: trials must be positive");
  if (z0.size() != g.size()) throw UsageError("measure_gossip_K: one value per node required");

  GossipOptions options;
  options.eps = eps;
  options.max_messages = max_messages;
  options.messages_per_exchange = messages_per_exchange;
  options.record_error = false;

  std::vector<std::uint64_t> passages(trials, 0);
  std::vector<std::exception_ptr> errors(trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < trials;) {
      try {
        GossipState state(g, std::vector<double>(z0.begin(), z0.end()), seed, t);
        const Trace tr = run(state, p, options);
        if (!tr.messages_to_eps) {
          throw SimulationError("measure_gossip_K: trial " + std::to_string(t) +
                                " did not reach eps within the message limit");
        }
        passages[t] = *tr.messages_to_eps;
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, trials));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  GossipKEstimate out;
  out.eps = eps;
  out.passages = passages;
  double total = 0.0;
  for (auto m : passages) total += static_cast<double>(m);
  out.mean_passage = total / static_cast<double>(trials);
  // The error is nonincreasing along a run, so "error at k >= eps" is
  // "passage > k"; at most floor(eps T) passages may exceed k.
  std::sort(passages.begin(), passages.end());
  const auto allowed = static_cast<std::size_t>(std::floor(eps * static_cast<double>(trials)));
  out.k_hat = passages[trials - std::min(allowed, trials - 1) - 1];
  return out;
}

}  // namespace tokgossip::experiments
