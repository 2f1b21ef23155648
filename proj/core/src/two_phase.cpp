#include <algorithm>
#include <cmath>

#include "tokgossip/analysis.hpp"
#include "tokgossip/protocols.hpp"

namespace tokgossip {

double resolve_switch_time(const Graph& g, const SwitchSpec& spec, const ClockMode& mode) {
  if (const auto* e = std::get_if<ExplicitTime>(&spec)) {
    if (!(e->t >= 0.0)) throw UsageError("two_phase: switch time must be nonnegative");
    return e->t;
  }
  const auto& tg = std::get<TargetGamma>(spec);
  if (!(tg.gamma >= 1.0)) throw UsageError("two_phase: gamma must be at least 1");
  if (tg.gamma >= static_cast<double>(g.size())) return 0.0;
  analysis::DecayOptions options;
  options.mode = mode;
  const auto curve = analysis::estimate_decay(g, tg.pilot_trials, options, tg.pilot_seed);
  return curve.t_gamma(tg.gamma).t;
}

Trace two_phase_run(const Graph& g, std::vector<FusionValue> x, const FusionSpec& fusion,
                    const SwitchSpec& spec, const ClockMode& mode, std::uint64_t master_seed,
                    std::uint64_t trial) {
  const double t_switch = resolve_switch_time(g, spec, mode);
  ProtocolParams params;
  params.mode = mode;
  auto state = SimState::init(ProtocolKind::TwoPhase, g, std::move(x), fusion, params,
                              master_seed, trial);
  Trace tr = run(state, UntilTime{t_switch, true});
  tr.meta.protocol = "two_phase";
  tr.switch_time = tr.tau;
  tr.phase1_messages = tr.total_messages;

  std::vector<FloodOrigin> origins;
  for (NodeId v : state.active()) {
    origins.push_back({v, {state.nodes()[v].value, state.nodes()[v].count}});
  }
  std::sort(origins.begin(), origins.end(),
            [](const FloodOrigin& a, const FloodOrigin& b) { return a.node < b.node; });
  const FloodResult flood = cfld_run(g, origins, fusion, mode, state.rng(), tr.switch_time);

  tr.phase2_messages = flood.transmissions;
  tr.total_messages = tr.phase1_messages + tr.phase2_messages;
  tr.flood_duration = is_continuous(mode) ? flood.duration - tr.switch_time : flood.duration;
  tr.tau = tr.switch_time + (is_continuous(mode) ? flood.completion_time - tr.switch_time
                                                 : flood.completion_time);
  tr.points.push_back({tr.tau, static_cast<std::uint32_t>(origins.size()), tr.total_messages});
  for (std::size_t i = 0; i < g.size(); ++i) {
    tr.sends[i] += flood.sends[i];
    tr.receives[i] += flood.receives[i];
    tr.final_count[i] = flood.node_payload[i].count;
  }

  const FusionValue expected = fusion.fold(state.initial_values());
  bool all = flood.complete;
  for (const auto& p : flood.node_payload) {
    if (p.count != g.size() || !approx_equal(p.value, expected)) all = false;
  }
  tr.consensus = all;
  tr.terminated = all;
  tr.complete = tr.complete && flood.complete;
  tr.final_payload = flood.node_payload.front();
  tr.holders.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) tr.holders[i] = static_cast<NodeId>(i);
  return tr;
}

}  // namespace tokgossip
