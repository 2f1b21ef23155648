#include <algorithm>
#include <cmath>
#include <limits>

#include "tokgossip/protocols.hpp"

namespace tokgossip {

Trace hybrid_k_run(const Graph& g, std::vector<FusionValue> x, std::size_t k, double horizon,
                   std::uint64_t master_seed, std::uint64_t trial, const RunOptions& options) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw UsageError("hybrid_k: bad horizon");
  const FusionSpec fusion(FusionKind::WeightedAvg);
  ProtocolParams params;
  params.hybrid_k = k;
  auto state = SimState::init(ProtocolKind::HybridK, g, std::move(x), fusion, params,
                              master_seed, trial);
  const auto target = std::get<AvgValue>(fusion.fold(state.initial_values())).estimate;
  Trace tr = run(state, UntilTime{horizon, false}, options);
  tr.node_error.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
  tr.max_error = 0.0;
  for (NodeId v : state.active()) {
    const double e = std::abs(std::get<AvgValue>(state.nodes()[v].value).estimate - target);
    tr.node_error[v] = e;
    tr.max_error = std::max(tr.max_error, e);
  }
  return tr;
}

}  // namespace tokgossip
