#include <cmath>
#include <limits>

#include "json.hpp"
#include "tokgossip/experiments.hpp"

namespace tokgossip::experiments {

using nlohmann::json;

namespace {

// ---- reading ---------------------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw UsageError(std::string(where) + ": unknown key '" + k + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config: key '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw UsageError(std::string("config: key '") + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

constexpr std::initializer_list<const char*> kGraphKeys = {
    "family", "n", "side", "dim", "radius", "degree", "seed", "max_retries"};

GraphSpec graph_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config: sweep entries must be objects");
  reject_unknown(j, kGraphKeys, "graph");
  GraphSpec s;
  s.family = parse_family(get_or<std::string>(j, "family", ""));
  s.n = get_count(j, "n", 0);
  s.side = get_count(j, "side", 0);
  s.dim = get_count(j, "dim", s.family == Family::Grid2d ? 2 : s.dim);
  if (j.contains("radius") && !j.at("radius").is_null()) s.radius = get_or<double>(j, "radius", 0.0);
  s.degree = get_count(j, "degree", s.degree);
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  s.max_retries = get_count(j, "max_retries", s.max_retries);
  if (s.n == 0 && s.side > 0) s.n = s.node_count();
  s.validate();
  return s;
}

// A sweep is a list of graph objects, or one object whose n or side is a list.
std::vector<GraphSpec> sweep_from_json(const json& j) {
  std::vector<GraphSpec> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(graph_from_json(e));
    return out;
  }
  if (!j.is_object()) throw UsageError("config: sweep must be a list or an object");
  const char* axis = nullptr;
  for (const char* key : {"n", "side"}) {
    if (j.contains(key) && j.at(key).is_array()) {
      if (axis) throw UsageError("config: sweep may vary only one of n and side");
      axis = key;
    }
  }
  if (!axis) {
    out.push_back(graph_from_json(j));
    return out;
  }
  for (const auto& v : j.at(axis)) {
    json e = j;
    e[axis] = v;
    out.push_back(graph_from_json(e));
  }
  return out;
}

ClockMode clock_from_json(const json& p) {
  const auto clock = get_or<std::string>(p, "clock", "continuous");
  if (clock == "continuous") {
    if (p.contains("lazy_prob") && !p.at("lazy_prob").is_null()) {
      throw UsageError("config: lazy_prob applies to the discrete clock only");
    }
    return ContinuousClock{};
  }
  if (clock == "discrete") return SynchronousDiscrete{get_or<double>(p, "lazy_prob", 0.5)};
  throw UsageError("config: clock must be 'continuous' or 'discrete'");
}

ProtocolConfig protocol_from_json(const json& p) {
  if (!p.is_object()) throw UsageError("config: protocol must be an object");
  reject_unknown(p,
                 {"kind", "clock", "lazy_prob", "fusion", "srw_origin", "switch_time", "gamma",
                  "pilot_trials", "eps", "messages_per_exchange", "max_messages", "k", "horizon",
                  "max_time"},
                 "protocol");
  ProtocolConfig c;
  c.kind = parse_protocol_kind(get_or<std::string>(p, "kind", "crw"));
  c.mode = clock_from_json(p);
  const std::string default_fusion = c.kind == ProtocolKind::HybridK || c.kind == ProtocolKind::Gossip
                                         ? "wavg"
                                         : "sum";
  c.fusion = parse_fusion_kind(get_or<std::string>(p, "fusion", default_fusion));
  if (p.contains("srw_origin") && !p.at("srw_origin").is_null()) {
    c.srw_origin = static_cast<NodeId>(get_count(p, "srw_origin", 0));
  }
  if (p.contains("switch_time") && !p.at("switch_time").is_null()) {
    c.switch_time = get_or<double>(p, "switch_time", 0.0);
  }
  if (p.contains("gamma") && !p.at("gamma").is_null()) {
    const auto& g = p.at("gamma");
    if (g.is_string()) {
      if (g.get<std::string>() != "log_n") throw UsageError("config: gamma must be a number or 'log_n'");
    } else {
      c.gamma = get_or<double>(p, "gamma", 0.0);
    }
  }
  c.pilot_trials = get_count(p, "pilot_trials", c.pilot_trials);
  c.eps = get_or<double>(p, "eps", c.eps);
  c.messages_per_exchange =
      static_cast<unsigned>(get_count(p, "messages_per_exchange", c.messages_per_exchange));
  c.max_messages = get_or<std::uint64_t>(p, "max_messages", c.max_messages);
  c.k = get_count(p, "k", c.k);
  c.horizon = get_or<double>(p, "horizon", c.horizon);
  c.max_time = get_or<double>(p, "max_time", c.max_time);
  return c;
}

ValueSpec values_from_json(const json& v) {
  if (!v.is_object()) throw UsageError("config: values must be an object");
  reject_unknown(v, {"source", "low", "high", "seed", "path"}, "values");
  ValueSpec s;
  s.source = parse_value_source(get_or<std::string>(v, "source", "uniform"));
  s.low = get_or<std::int64_t>(v, "low", s.low);
  s.high = get_or<std::int64_t>(v, "high", s.high);
  s.seed = get_or<std::uint64_t>(v, "seed", s.seed);
  s.path = get_or<std::string>(v, "path", "");
  if (s.source == ValueSource::File && s.path.empty()) throw UsageError("config: file values need a path");
  return s;
}

ExperimentConfig experiment_from_json(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  reject_unknown(j, {"name", "sweep", "protocol", "values", "trials", "master_seed", "jobs", "output_dir"},
                 "experiment");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  if (!j.contains("sweep")) throw UsageError("config: sweep is missing");
  c.sweep = sweep_from_json(j.at("sweep"));
  c.protocol = protocol_from_json(j.contains("protocol") ? j.at("protocol") : json::object());
  if (j.contains("values")) {
    c.values = values_from_json(j.at("values"));
  } else if (c.protocol.kind == ProtocolKind::Gossip) {
    c.values.source = ValueSource::Spike;  // the default gossip start vector
  }
  c.trials = get_count(j, "trials", c.trials);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", default_seed);
  c.jobs = get_count(j, "jobs", c.jobs);
  c.output_dir = get_or<std::string>(j, "output_dir", "");
  c.validate();
  return c;
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
}

// ---- writing ---------------------------------------------------------------

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json graph_to_json(const GraphSpec& s) {
  json j;
  j["family"] = std::string(to_string(s.family));
  j["n"] = s.node_count();
  j["side"] = s.side;
  j["dim"] = s.dim;
  j["radius"] = s.radius ? json(*s.radius) : json(nullptr);
  j["degree"] = s.degree;
  j["seed"] = s.seed;
  j["max_retries"] = s.max_retries;
  return j;
}

json protocol_to_json(const ProtocolConfig& c) {
  json j;
  j["kind"] = std::string(to_string(c.kind));
  j["clock"] = is_continuous(c.mode) ? "continuous" : "discrete";
  j["lazy_prob"] = is_continuous(c.mode) ? json(nullptr) : json(lazy_prob(c.mode));
  j["fusion"] = std::string(to_string(c.fusion));
  j["srw_origin"] = c.srw_origin ? json(*c.srw_origin) : json(nullptr);
  j["switch_time"] = c.switch_time ? json(*c.switch_time) : json(nullptr);
  j["gamma"] = c.gamma ? json(*c.gamma) : json("log_n");
  j["pilot_trials"] = c.pilot_trials;
  j["eps"] = c.eps;
  j["messages_per_exchange"] = c.messages_per_exchange;
  j["max_messages"] = c.max_messages == std::numeric_limits<std::uint64_t>::max()
                          ? json(nullptr)
                          : json(c.max_messages);
  j["k"] = c.k;
  j["horizon"] = c.horizon;
  j["max_time"] = nullable(c.max_time);
  return j;
}

json experiment_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["sweep"] = json::array();
  for (const auto& s : c.sweep) j["sweep"].push_back(graph_to_json(s));
  j["protocol"] = protocol_to_json(c.protocol);
  j["values"] = {{"source", std::string(to_string(c.values.source))},
                 {"low", c.values.low},
                 {"high", c.values.high},
                 {"seed", c.values.seed},
                 {"path", c.values.path}};
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["jobs"] = c.jobs;
  j["output_dir"] = c.output_dir;
  return j;
}

json fit_to_json(const ScalingFit& f) {
  return {{"metric", f.metric},       {"predictor", f.predictor}, {"log_log", f.log_log},
          {"slope", f.slope},         {"intercept", f.intercept}, {"r_squared", f.r_squared},
          {"points", f.points}};
}

}  // namespace

std::string_view to_string(CellCheck c) {
  switch (c) {
    case CellCheck::Band:
      return "band";
    case CellCheck::MinSlope:
      return "min_slope";
    case CellCheck::Positive:
      return "positive";
  }
  return "band";
}

CellCheck parse_cell_check(std::string_view name) {
  if (name == "band") return CellCheck::Band;
  if (name == "min_slope") return CellCheck::MinSlope;
  if (name == "positive") return CellCheck::Positive;
  throw UsageError("unknown cell check '" + std::string(name) + "'");
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  return experiment_from_json(parse_text(json_text), 1);
}

std::string canonical_json(const ExperimentConfig& config) {
  return experiment_to_json(config).dump(2) + "\n";
}

Suite parse_suite(std::string_view json_text) {
  const json j = parse_text(json_text);
  if (!j.is_object()) throw UsageError("suite: top level must be an object");
  reject_unknown(j, {"name", "master_seed", "cells"}, "suite");
  Suite s;
  s.name = get_or<std::string>(j, "name", s.name);
  s.master_seed = get_or<std::uint64_t>(j, "master_seed", s.master_seed);
  if (!j.contains("cells") || !j.at("cells").is_array() || j.at("cells").empty()) {
    throw UsageError("suite: cells must be a nonempty list");
  }
  std::size_t index = 0;
  for (const auto& c : j.at("cells")) {
    if (!c.is_object()) throw UsageError("suite: cells must be objects");
    reject_unknown(c,
                   {"name", "experiment", "metric", "predictor", "check", "band", "min_slope",
                    "min_r2", "log_log", "use_gossip_k", "enabled"},
                   "cell");
    SuiteCell cell;
    cell.name = get_or<std::string>(c, "name", "cell" + std::to_string(index));
    if (!c.contains("experiment")) throw UsageError("suite: cell '" + cell.name + "' has no experiment");
    cell.experiment = experiment_from_json(c.at("experiment"), derive_stream_seed(s.master_seed, index));
    cell.metric = get_or<std::string>(c, "metric", "tau");
    cell.predictor = get_or<std::string>(c, "predictor", "n");
    predictor_value(cell.predictor, 16, 4, 2);  // rejects unknown names early
    cell.check = parse_cell_check(get_or<std::string>(c, "check", "band"));
    cell.band = get_or<double>(c, "band", cell.band);
    cell.min_slope = get_or<double>(c, "min_slope", cell.min_slope);
    cell.min_r2 = get_or<double>(c, "min_r2", cell.min_r2);
    cell.log_log = get_or<bool>(c, "log_log", cell.log_log);
    cell.use_gossip_k = get_or<bool>(c, "use_gossip_k", cell.use_gossip_k);
    cell.enabled = get_or<bool>(c, "enabled", cell.enabled);
    if (cell.use_gossip_k && cell.experiment.protocol.kind != ProtocolKind::Gossip) {
      throw UsageError("suite: cell '" + cell.name + "' uses gossip K-hat without the gossip protocol");
    }
    if (cell.experiment.sweep.size() < 4) {
      throw UsageError("suite: cell '" + cell.name + "' needs at least 4 sweep points");
    }
    s.cells.push_back(std::move(cell));
    ++index;
  }
  return s;
}

std::string canonical_json(const Suite& suite) {
  json j;
  j["name"] = suite.name;
  j["master_seed"] = suite.master_seed;
  j["cells"] = json::array();
  for (const auto& c : suite.cells) {
    j["cells"].push_back({{"name", c.name},
                          {"experiment", experiment_to_json(c.experiment)},
                          {"metric", c.metric},
                          {"predictor", c.predictor},
                          {"check", std::string(to_string(c.check))},
                          {"band", c.band},
                          {"min_slope", c.min_slope},
                          {"min_r2", c.min_r2},
                          {"log_log", c.log_log},
                          {"use_gossip_k", c.use_gossip_k},
                          {"enabled", c.enabled}});
  }
  return j.dump(2) + "\n";
}

bool SuiteReport::all_pass() const {
  for (const auto& c : cells) {
    if (c.enabled && !c.pass) return false;
  }
  return true;
}

namespace {

std::vector<AggregateRecord> gossip_k_records(const SuiteCell& cell, std::size_t jobs) {
  const auto& cfg = cell.experiment;
  std::vector<AggregateRecord> out;
  for (std::size_t p = 0; p < cfg.sweep.size(); ++p) {
    const Graph g = generate(cfg.sweep[p]);
    const std::uint64_t seed = point_seed(cfg.master_seed, p);
    const auto p_uniform = GossipMatrix::uniform(g);
    const auto z0 = gossip_start(cfg.values, p_uniform, seed);
    const auto k = measure_gossip_K(g, p_uniform, cfg.protocol.eps, z0, cfg.trials,
                                    seed, cfg.protocol.max_messages,
                                    cfg.protocol.messages_per_exchange, jobs);
    AggregateRecord r;
    r.n = g.size();
    r.side = cfg.sweep[p].side;
    r.dim = cfg.sweep[p].family == Family::Torus ? cfg.sweep[p].dim
            : cfg.sweep[p].family == Family::Grid2d ? 2
                                                    : 1;
    r.graph = cfg.sweep[p].describe();
    r.protocol = "gossip";
    r.metric = cell.metric;
    r.mean = static_cast<double>(k.k_hat) / static_cast<double>(g.size());
    r.min = r.max = r.mean;
    r.trials = cfg.trials;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SuiteReport table1_report(const Suite& suite, std::size_t jobs) {
  SuiteReport report;
  for (const auto& cell : suite.cells) {
    CellResult r;
    r.name = cell.name;
    r.enabled = cell.enabled;
    if (!cell.enabled) {
      r.reason = "disabled";
      report.cells.push_back(std::move(r));
      continue;
    }
    if (cell.use_gossip_k) {
      r.records = gossip_k_records(cell, jobs);
    } else {
      ExperimentConfig cfg = cell.experiment;
      cfg.jobs = jobs;
      r.records = aggregate(cfg, run_trials(cfg));
    }
    r.fit = fit_scaling(r.records, cell.metric, cell.predictor, cell.log_log);
    const double slope = r.fit.slope;
    const bool r2_ok = r.fit.r_squared >= cell.min_r2;
    switch (cell.check) {
      case CellCheck::Band:
        r.pass = std::abs(slope - 1.0) <= cell.band && r2_ok;
        r.reason = "slope " + format_double(slope) + (r.pass ? " within " : " outside ") + "1 +/- " +
                   format_double(cell.band);
        break;
      case CellCheck::MinSlope:
        r.pass = slope >= cell.min_slope && r2_ok;
        r.reason = "slope " + format_double(slope) + (slope >= cell.min_slope ? " >= " : " < ") +
                   format_double(cell.min_slope);
        break;
      case CellCheck::Positive:
        r.pass = slope > 0.0 && r2_ok;
        r.reason = "slope " + format_double(slope) + (slope > 0.0 ? " > 0" : " <= 0");
        break;
    }
    if (!r2_ok) r.reason += ", r2 " + format_double(r.fit.r_squared) + " < " + format_double(cell.min_r2);
    report.cells.push_back(std::move(r));
  }
  return report;
}

std::string fits_json(const SuiteReport& report) {
  json j;
  j["all_pass"] = report.all_pass();
  j["cells"] = json::array();
  for (const auto& c : report.cells) {
    json e = {{"name", c.name}, {"enabled", c.enabled}, {"pass", c.pass}, {"reason", c.reason}};
    if (c.enabled) e["fit"] = fit_to_json(c.fit);
    j["cells"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string fits_json(std::span<const ScalingFit> fits) {
  json j = json::array();
  for (const auto& f : fits) j.push_back(fit_to_json(f));
  return j.dump(2) + "\n";
}

}  // namespace tokgossip::experiments
