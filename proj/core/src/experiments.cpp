#include "tokgossip/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "tokgossip/stats.hpp"

namespace tokgossip::experiments {

std::string_view to_string(ValueSource s) {
  switch (s) {
    case ValueSource::UniformRandom:
      return "uniform";
    case ValueSource::Spike:
      return "spike";
    case ValueSource::Ones:
      return "ones";
    case ValueSource::File:
      return "file";
    case ValueSource::SlowestMode:
      return "slowest_mode";
  }
  return "uniform";
}

ValueSource parse_value_source(std::string_view name) {
  if (name == "uniform" || name == "uniform_random") return ValueSource::UniformRandom;
  if (name == "spike") return ValueSource::Spike;
  if (name == "ones") return ValueSource::Ones;
  if (name == "file") return ValueSource::File;
  if (name == "slowest_mode") return ValueSource::SlowestMode;
  throw UsageError("unknown value source '" + std::string(name) + "'");
}

namespace {

RngStream value_stream(const ValueSpec& spec, std::uint64_t trial_seed) {
  return RngStream(derive_stream_seed(trial_seed, 0x5eed0000ULL), spec.seed);
}

std::vector<std::int64_t> make_integers(const ValueSpec& spec, std::size_t n,
                                        std::uint64_t trial_seed) {
  std::vector<std::int64_t> out(n, 0);
  switch (spec.source) {
    case ValueSource::UniformRandom: {
      if (spec.high < spec.low) throw UsageError("values: high < low");
      RngStream rng = value_stream(spec, trial_seed);
      const auto width = static_cast<std::uint64_t>(spec.high - spec.low) + 1;
      for (auto& v : out) v = spec.low + static_cast<std::int64_t>(rng.uniform_index(width));
      break;
    }
    case ValueSource::Spike:
      out[0] = static_cast<std::int64_t>(n);
      break;
    case ValueSource::Ones:
      std::fill(out.begin(), out.end(), 1);
      break;
    case ValueSource::File:
      break;
    case ValueSource::SlowestMode:
      throw UsageError("values: slowest_mode applies to gossip runs only");
  }
  return out;
}

}  // namespace

std::vector<FusionValue> make_values(const ValueSpec& spec, const FusionSpec& fusion,
                                     std::size_t n, std::uint64_t trial_seed) {
  if (spec.source == ValueSource::File) {
    auto v = load_values(spec.path, fusion);
    if (v.size() != n) {
      throw UsageError("values file '" + spec.path + "' has " + std::to_string(v.size()) +
                       " lines for " + std::to_string(n) + " nodes");
    }
    return v;
  }
  std::vector<FusionValue> out;
  out.reserve(n);
  for (auto x : make_integers(spec, n, trial_seed)) out.push_back(fusion.from_integer(x));
  return out;
}

std::vector<double> gossip_start(const ValueSpec& spec, const GossipMatrix& p, std::uint64_t trial_seed) {
  if (spec.source == ValueSource::SlowestMode) return slowest_mode(p);
  return make_reals(spec, p.graph().size(), trial_seed);
}

std::vector<double> make_reals(const ValueSpec& spec, std::size_t n, std::uint64_t trial_seed) {
  std::vector<double> out;
  out.reserve(n);
  if (spec.source == ValueSource::File) {
    for (const auto& v : make_values(spec, FusionSpec(FusionKind::WeightedAvg), n, trial_seed)) {
      out.push_back(std::get<AvgValue>(v).estimate);
    }
    return out;
  }
  for (auto x : make_integers(spec, n, trial_seed)) out.push_back(static_cast<double>(x));
  return out;
}

namespace {

void validate_settings(const ExperimentConfig& c) {
  const auto& protocol = c.protocol;
  if (c.sweep.empty()) throw UsageError("config: sweep is empty");
  if (c.trials < 1) throw UsageError("config: trials must be at least 1");
  tokgossip::validate(protocol.mode);
  if (protocol.kind == ProtocolKind::HybridK && protocol.fusion != FusionKind::WeightedAvg) {
    throw UsageError("config: hybrid_k requires fusion wavg");
  }
  if (c.values.source == ValueSource::SlowestMode && protocol.kind != ProtocolKind::Gossip) {
    throw UsageError("config: slowest_mode values apply to gossip only");
  }
  if (protocol.kind == ProtocolKind::Gossip && !is_continuous(protocol.mode)) {
    throw UsageError("config: gossip runs in continuous time");
  }
  if (protocol.gamma && *protocol.gamma < 1.0) throw UsageError("config: gamma must be >= 1");
  if (protocol.switch_time && *protocol.switch_time < 0.0) {
    throw UsageError("config: switch time must be >= 0");
  }
  if (protocol.kind == ProtocolKind::Gossip && !(protocol.eps > 0.0 && protocol.eps < 1.0)) {
    throw UsageError("config: eps must lie in (0, 1)");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  validate_settings(*this);
  for (const auto& s : sweep) s.validate();
}

std::uint64_t point_seed(std::uint64_t master_seed, std::size_t point) {
  return derive_stream_seed(master_seed, 0x9017000000000000ULL + point);
}

double two_phase_switch_time(const Graph& g, const ProtocolConfig& protocol, std::uint64_t seed) {
  if (protocol.switch_time) return *protocol.switch_time;
  const double gamma = protocol.gamma ? *protocol.gamma
                                      : std::ceil(std::log(static_cast<double>(g.size())));
  TargetGamma tg;
  tg.gamma = std::max(1.0, gamma);
  tg.pilot_trials = protocol.pilot_trials;
  tg.pilot_seed = derive_stream_seed(seed, 0x9110);
  return resolve_switch_time(g, tg, protocol.mode);
}

Trace run_one(const Graph& g, const ProtocolConfig& protocol, const ValueSpec& values,
              std::uint64_t seed, std::uint64_t trial, std::optional<double> switch_time) {
  const std::size_t n = g.size();
  const std::uint64_t value_seed = derive_stream_seed(seed, trial);
  switch (protocol.kind) {
    case ProtocolKind::Srw:
    case ProtocolKind::Crw: {
      const FusionSpec fusion(protocol.fusion);
      ProtocolParams params;
      params.mode = protocol.mode;
      params.srw_origin = protocol.srw_origin;
      auto state = SimState::init(protocol.kind, g, make_values(values, fusion, n, value_seed),
                                  fusion, params, seed, trial);
      RunOptions options;
      options.max_time = protocol.max_time;
      return run(state, UntilTermination{}, options);
    }
    case ProtocolKind::TwoPhase: {
      const FusionSpec fusion(protocol.fusion);
      const double t = switch_time ? *switch_time : two_phase_switch_time(g, protocol, seed);
      return two_phase_run(g, make_values(values, fusion, n, value_seed), fusion, ExplicitTime{t},
                           protocol.mode, seed, trial);
    }
    case ProtocolKind::Gossip: {
      const auto p = GossipMatrix::uniform(g);
      GossipState state(g, gossip_start(values, p, value_seed), seed, trial);
      GossipOptions options;
      options.eps = protocol.eps;
      options.messages_per_exchange = protocol.messages_per_exchange;
      options.max_messages = protocol.max_messages;
      return run(state, p, options);
    }
    case ProtocolKind::HybridK: {
      const FusionSpec fusion(FusionKind::WeightedAvg);
      return hybrid_k_run(g, make_values(values, fusion, n, value_seed), protocol.k,
                          protocol.horizon, seed, trial);
    }
  }
  throw UsageError("run_one: unsupported protocol");
}

namespace {

bool trace_is_exact(const Trace& tr, const ProtocolConfig& protocol, const Graph& g,
                    const ValueSpec& values, std::uint64_t seed, std::uint64_t trial) {
  switch (protocol.kind) {
    case ProtocolKind::Srw:
    case ProtocolKind::Crw: {
      if (!tr.final_payload) return false;
      const FusionSpec fusion(protocol.fusion);
      const auto x = make_values(values, fusion, g.size(), derive_stream_seed(seed, trial));
      return tr.final_payload->count == g.size() &&
             approx_equal(tr.final_payload->value, fusion.fold(x));
    }
    case ProtocolKind::TwoPhase:
      return tr.consensus;
    case ProtocolKind::Gossip:
      return tr.complete;
    case ProtocolKind::HybridK:
      return false;
  }
  return false;
}

template <class Task>
void parallel_for(std::size_t count, std::size_t jobs, Task task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // Report the first failure in task order so errors are deterministic too.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<TrialSummary> run_trials(const ExperimentConfig& config, const TraceSink& sink) {
  config.validate();
  std::vector<Graph> graphs;
  graphs.reserve(config.sweep.size());
  for (const auto& spec : config.sweep) graphs.push_back(generate(spec));
  return run_trials(config, graphs, sink);
}

std::vector<TrialSummary> run_trials(const ExperimentConfig& config, std::span<const Graph> graphs,
                                     const TraceSink& sink) {
  validate_settings(config);
  const std::size_t points = config.sweep.size();
  if (graphs.size() != points) throw UsageError("run_trials: one graph per sweep point required");
  std::vector<std::optional<double>> switch_times(points);
  for (std::size_t p = 0; p < points; ++p) {
    if (config.protocol.kind == ProtocolKind::TwoPhase) {
      switch_times[p] = two_phase_switch_time(graphs[p], config.protocol,
                                              point_seed(config.master_seed, p));
    }
  }

  std::vector<TrialSummary> out(points * config.trials);
  std::mutex sink_mutex;
  parallel_for(out.size(), config.jobs, [&](std::size_t task) {
    const std::size_t p = task / config.trials;
    const std::uint64_t trial = task % config.trials;
    const Graph& g = graphs[p];
    const std::uint64_t seed = point_seed(config.master_seed, p);
    const Trace tr = run_one(g, config.protocol, config.values, seed, trial, switch_times[p]);
    if (!tr.complete) {
      throw SimulationError("sweep point " + std::to_string(p) + " (" + config.sweep[p].describe() +
                            "), trial " + std::to_string(trial) +
                            ": trace incomplete at t = " + format_double(tr.tau));
    }
    TrialSummary& s = out[task];
    s.point = p;
    s.n = g.size();
    s.trial = trial;
    s.seed = seed;
    s.tau = tr.tau;
    s.messages = tr.total_messages;
    s.per_node = static_cast<double>(tr.total_messages) / static_cast<double>(g.size());
    s.complete = tr.complete;
    s.exact = trace_is_exact(tr, config.protocol, g, config.values, seed, trial);
    s.phase1_messages = tr.phase1_messages;
    s.phase2_messages = tr.phase2_messages;
    s.switch_time = tr.switch_time;
    s.max_error = tr.max_error;
    if (sink) {
      std::lock_guard lock(sink_mutex);
      sink(p, trial, tr);
    }
  });
  return out;
}

std::vector<AggregateRecord> aggregate(const ExperimentConfig& config,
                                       std::span<const TrialSummary> summaries) {
  std::vector<TrialSummary> sorted(summaries.begin(), summaries.end());
  std::sort(sorted.begin(), sorted.end(), [](const TrialSummary& a, const TrialSummary& b) {
    return a.point != b.point ? a.point < b.point : a.trial < b.trial;
  });
  struct Metric {
    const char* name;
    double (*get)(const TrialSummary&);
  };
  std::vector<Metric> metrics = {
      {"tau", [](const TrialSummary& s) { return s.tau; }},
      {"eta", [](const TrialSummary& s) { return static_cast<double>(s.messages); }},
      {"eta_per_node", [](const TrialSummary& s) { return s.per_node; }},
  };
  if (config.protocol.kind == ProtocolKind::TwoPhase) {
    metrics.push_back({"phase1_messages", [](const TrialSummary& s) { return static_cast<double>(s.phase1_messages); }});
    metrics.push_back({"phase2_messages", [](const TrialSummary& s) { return static_cast<double>(s.phase2_messages); }});
  }
  if (config.protocol.kind == ProtocolKind::HybridK) {
    metrics.push_back({"max_error", [](const TrialSummary& s) { return s.max_error; }});
  }

  std::vector<AggregateRecord> out;
  std::size_t begin = 0;
  while (begin < sorted.size()) {
    std::size_t end = begin;
    while (end < sorted.size() && sorted[end].point == sorted[begin].point) ++end;
    const std::size_t p = sorted[begin].point;
    const GraphSpec& spec = config.sweep.at(p);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      std::vector<double> xs;
      xs.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) xs.push_back(metrics[m].get(sorted[i]));
      AggregateRecord r;
      r.n = sorted[begin].n;
      r.side = spec.side;
      r.dim = spec.family == Family::Torus ? spec.dim : (spec.family == Family::Grid2d ? 2 : 1);
      r.graph = spec.describe();
      r.protocol = std::string(tokgossip::to_string(config.protocol.kind));
      r.metric = metrics[m].name;
      r.mean = stats::mean(xs);
      r.standard_error = stats::bootstrap_standard_error(
          xs, 1000, derive_stream_seed(sorted[begin].seed, 0xb0000 + m));
      r.min = *std::min_element(xs.begin(), xs.end());
      r.max = *std::max_element(xs.begin(), xs.end());
      r.trials = xs.size();
      out.push_back(std::move(r));
    }
    begin = end;
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const AggregateRecord> records) {
  out << "n,protocol,metric,mean,stderr,trials\n";
  for (const auto& r : records) {
    out << r.n << ',' << r.protocol << ',' << r.metric << ',' << format_double(r.mean) << ','
        << format_double(r.standard_error) << ',' << r.trials << '\n';
  }
}

double predictor_value(std::string_view predictor, std::size_t n, std::size_t side,
                       std::size_t dim) {
  const double x = static_cast<double>(n);
  const double s = static_cast<double>(side);
  if (predictor == "n") return x;
  if (predictor == "n_log_n") return x * std::log(x);
  if (predictor == "log_n") return std::log(x);
  if (predictor == "log2_n") return std::log(x) * std::log(x);
  if (predictor == "n2") return x * x;
  if (predictor == "side2_log_side") {
    if (side == 0) throw UsageError("predictor side2_log_side needs a lattice side");
    return s * s * std::log(s);
  }
  if (predictor == "n_2_over_d") {
    if (dim == 0) throw UsageError("predictor n_2_over_d needs a dimension");
    return std::pow(x, 2.0 / static_cast<double>(dim));
  }
  throw UsageError("unknown predictor '" + std::string(predictor) + "'");
}

ScalingFit fit_scaling(std::span<const AggregateRecord> records, std::string_view metric,
                       std::string_view predictor, bool log_log) {
  std::vector<double> xs, ys;
  for (const auto& r : records) {
    if (r.metric != metric) continue;
    const double x = predictor_value(predictor, r.n, r.side, r.dim);
    if (log_log) {
      if (!(x > 0.0) || !(r.mean > 0.0)) throw AnalysisError("fit_scaling: log of a nonpositive value");
      xs.push_back(std::log(x));
      ys.push_back(std::log(r.mean));
    } else {
      xs.push_back(x);
      ys.push_back(r.mean);
    }
  }
  if (xs.size() < 4) {
    throw UsageError("fit_scaling: need at least 4 sweep points, got " + std::to_string(xs.size()));
  }
  const auto f = stats::least_squares(xs, ys);
  ScalingFit out;
  out.metric = std::string(metric);
  out.predictor = std::string(predictor);
  out.log_log = log_log;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r_squared = f.r_squared;
  out.points = xs.size();
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw AnalysisError("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

}  // namespace tokgossip::experiments
