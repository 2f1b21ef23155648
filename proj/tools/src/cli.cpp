#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tokgossip/analysis.hpp"
#include "tokgossip/experiments.hpp"

namespace tokgossip::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace experiments;

constexpr const char* kVersion = TOKGOSSIP_VERSION;
constexpr int kCheckFailed = 1;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << bytes;
}

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("TOKGOSSIP_OUT"); env && *env) return env;
  return "runs";
}

// Run directories are keyed by the config hash, so reruns overwrite in place.
fs::path make_run_dir(const fs::path& root, const std::string& hash) {
  fs::path dir = root / hash.substr(0, 16);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& hash,
                    std::uint64_t seed, const std::string& started,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config_hash"] = hash;
  m["config"] = "config.json";
  m["master_seed"] = seed;
  m["tool_version"] = kVersion;
  m["started_at"] = started;
  m["finished_at"] = utc_now();
  m["outputs"] = outputs;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

// ---- graph selection ------------------------------------------------------

struct GraphArgs {
  std::string file;
  std::string kind;
  std::size_t n = 0;
  std::size_t side = 0;
  std::size_t dim = 2;
  std::uint64_t seed = 0;
  std::optional<double> radius;
  std::size_t degree = 6;
};

void add_graph_options(CLI::App* app, GraphArgs& a, bool with_file) {
  if (with_file) app->add_option("--graph", a.file, "graph file (edge-list format)");
  app->add_option("--kind", a.kind, "clique|ring|path|torus|grid2d|rgg|random_regular");
  app->add_option("--n", a.n, "node count");
  app->add_option("--side", a.side, "torus / grid side length");
  app->add_option("--dim", a.dim, "torus dimension")->capture_default_str();
  app->add_option("--graph-seed,--gseed", a.seed, "generator seed");
  app->add_option("--radius", a.radius, "rgg radius");
  app->add_option("--degree", a.degree, "random_regular degree")->capture_default_str();
}

GraphSpec spec_from_args(const GraphArgs& a) {
  if (a.kind.empty()) throw UsageError("either --graph or --kind is required");
  GraphSpec s;
  s.family = parse_family(a.kind);
  s.n = a.n;
  s.side = a.side;
  s.dim = a.dim;
  s.seed = a.seed;
  s.radius = a.radius;
  s.degree = a.degree;
  s.validate();
  return s;
}

// GraphSpec label for a graph read from a file.
GraphSpec spec_from_graph(const Graph& g) {
  const auto& t = g.topology();
  GraphSpec s;
  s.family = t.family;
  s.n = g.size();
  s.side = t.side;
  s.dim = t.family == Family::Torus ? t.dim : 2;
  s.degree = t.degree;
  s.seed = g.seed();
  if (t.family == Family::Rgg) s.radius = t.radius;
  return s;
}

struct Selected {
  Graph graph;
  GraphSpec spec;
  std::optional<std::string> file_sha;
};

Selected select_graph(const GraphArgs& a) {
  if (!a.file.empty()) {
    if (!a.kind.empty()) throw UsageError("--graph and --kind are exclusive");
    Graph g = load_graph(a.file);
    GraphSpec s = spec_from_graph(g);
    return {std::move(g), s, sha256_hex(read_file(a.file))};
  }
  GraphSpec s = spec_from_args(a);
  return {generate(s), s, std::nullopt};
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  GraphArgs graph;
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out, std::ostream& err) {
  const Graph g = generate(spec_from_args(a.graph));
  const auto d = diameter(g);
  std::ostringstream summary;
  summary << "n=" << g.size() << " edges=" << g.edge_count() << " diameter=" << d.value
          << (d.estimate ? " (lower bound)" : "") << "\n";
  if (a.out.empty()) {
    write_graph(out, g);
    err << summary.str();
  } else {
    save_graph(a.out, g);
    out << summary.str();
  }
  return 0;
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
  GraphArgs graph;
  std::string proto = "crw";
  std::string fusion;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::string values;
  std::int64_t low = 0;
  std::int64_t high = 1000;
  std::uint64_t value_seed = 0;
  std::string clock = "continuous";
  double lazy = 0.5;
  std::string gamma;
  std::optional<double> switch_time;
  std::size_t pilot_trials = 200;
  double eps = 0.01;
  unsigned messages_per_exchange = 2;
  std::size_t k = 2;
  double horizon = 100.0;
  std::optional<double> max_time;
  std::size_t jobs = 1;
  std::string out;
  bool no_traces = false;
};

ValueSpec values_from_args(const RunArgs& a, ProtocolKind kind) {
  ValueSpec v;
  v.low = a.low;
  v.high = a.high;
  v.seed = a.value_seed;
  if (a.values.empty()) {
    v.source = kind == ProtocolKind::Gossip ? ValueSource::Spike : ValueSource::UniformRandom;
  } else if (a.values == "spike" || a.values == "ones" || a.values == "uniform" ||
             a.values == "slowest_mode") {
    v.source = parse_value_source(a.values);
  } else {
    v.source = ValueSource::File;
    v.path = a.values;
  }
  return v;
}

ExperimentConfig config_from_args(const RunArgs& a, const GraphSpec& spec) {
  ExperimentConfig c;
  c.name = "run";
  c.sweep = {spec};
  auto& p = c.protocol;
  p.kind = parse_protocol_kind(a.proto);
  if (a.clock == "discrete") {
    p.mode = SynchronousDiscrete{a.lazy};
  } else if (a.clock != "continuous") {
    throw UsageError("--clock must be continuous or discrete");
  }
  const bool averaging = p.kind == ProtocolKind::Gossip || p.kind == ProtocolKind::HybridK;
  p.fusion = parse_fusion_kind(a.fusion.empty() ? (averaging ? "wavg" : "sum") : a.fusion);
  if (!a.gamma.empty() && a.gamma != "log_n") p.gamma = parse_double(a.gamma);
  p.switch_time = a.switch_time;
  p.pilot_trials = a.pilot_trials;
  p.eps = a.eps;
  p.messages_per_exchange = a.messages_per_exchange;
  p.k = a.k;
  p.horizon = a.horizon;
  if (a.max_time) p.max_time = *a.max_time;
  c.values = values_from_args(a, p.kind);
  c.trials = a.trials;
  c.master_seed = a.seed;
  c.jobs = a.jobs;
  return c;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const Selected sel = select_graph(a.graph);
  ExperimentConfig config = config_from_args(a, sel.spec);

  auto stored = json::parse(canonical_json(config));
  if (sel.file_sha) stored["graph_file"] = {{"path", a.graph.file}, {"sha256", *sel.file_sha}};
  const std::string config_text = stored.dump(2) + "\n";
  const std::string hash = sha256_hex(config_text);
  const fs::path dir = make_run_dir(output_root(a.out), hash);
  write_file(dir / "config.json", config_text);

  std::vector<std::string> outputs = {"config.json", "summary.csv", "trials.csv"};
  if (!a.no_traces) fs::create_directories(dir / "traces");
  const std::vector<Graph> graphs = {sel.graph};
  const auto summaries = run_trials(config, graphs, [&](std::size_t, std::uint64_t trial, const Trace& t) {
    if (a.no_traces) return;
    const std::string stem = "trial_" + std::to_string(trial);
    save_trace((dir / "traces").string(), stem, t);
    for (const char* ext : {".csv", ".nodes.csv", ".json"}) outputs.push_back("traces/" + stem + ext);
  });

  std::ostringstream trials;
  trials << "trial,n,tau,messages,per_node,exact\n";
  bool all_exact = true;
  for (const auto& s : summaries) {
    trials << s.trial << ',' << s.n << ',' << format_double(s.tau) << ',' << s.messages << ','
           << format_double(s.per_node) << ',' << (s.exact ? 1 : 0) << '\n';
    all_exact = all_exact && (s.exact || config.protocol.kind == ProtocolKind::HybridK);
  }
  write_file(dir / "trials.csv", trials.str());
  const auto records = aggregate(config, summaries);
  std::ostringstream csv;
  write_summary_csv(csv, records);
  write_file(dir / "summary.csv", csv.str());
  write_manifest(dir, "run", hash, config.master_seed, started, outputs);

  if (!all_exact) {
    throw SimulationError(config.protocol.kind == ProtocolKind::TwoPhase
                              ? "two_phase: consensus not reached at every node"
                              : "final aggregate differs from the fold of the inputs");
  }
  auto mean_of = [&](std::string_view metric) {
    for (const auto& r : records)
      if (r.metric == metric) return r.mean;
    return 0.0;
  };
  out << format_double(mean_of("tau")) << ' ' << format_double(mean_of("eta")) << ' '
      << format_double(mean_of("eta_per_node")) << '\n';
  err << "run directory: " << dir.string() << '\n';
  return 0;
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  GraphArgs graph;
  std::string what;
  std::size_t t_max = 40;
  double lazy = 0.5;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::optional<double> gamma;
  std::string out;
  std::string csv;
};

json analyze_hitting(const Graph& g) {
  const auto h = analysis::mean_hitting_times(g);
  NodeId bu = 0, bv = 0;
  for (NodeId u = 0; u < g.size(); ++u)
    for (NodeId v = 0; v < g.size(); ++v)
      if (h.at(u, v) > h.at(bu, bv)) bu = u, bv = v;
  return {{"max", analysis::worst_case_hitting(h)}, {"argmax_u", bu}, {"argmax_v", bv},
          {"dense", h.dense}, {"relative_residual", h.relative_residual}};
}

json analyze_resistance(const Graph& g) {
  const auto r = analysis::resistance_report(g);
  return {{"rho_star", r.rho_star}, {"argmax_u", r.argmax_u}, {"argmax_v", r.argmax_v},
          {"hitting_bound", r.hitting_bound}, {"sigma", analysis::worst_case_hitting(g)}};
}

json analyze_meeting(const Graph& g) {
  const auto m = analysis::mean_meeting_times(g);
  return {{"max", analysis::worst_case_meeting(m)}, {"exact", m.exact},
          {"sigma", analysis::worst_case_hitting(g)}};
}

json analyze_decay(const Graph& g, const AnalyzeArgs& a) {
  analysis::DecayOptions o;
  const auto curve = analysis::estimate_decay(g, a.trials, o, a.seed);
  const double gamma = a.gamma ? *a.gamma : std::ceil(std::log(static_cast<double>(g.size())));
  const auto tg = curve.t_gamma(std::max(1.0, gamma));
  if (!a.csv.empty()) {
    std::ostringstream os;
    os << "t,N_hat,stderr,M_hat\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      os << format_double(curve.grid[i]) << ',' << format_double(curve.n_hat[i]) << ','
         << format_double(curve.n_stderr[i]) << ',' << format_double(curve.m_hat[i]) << '\n';
    }
    write_file(a.csv, os.str());
  }
  return {{"trials", curve.trials},
          {"mean_absorption", curve.mean_absorption},
          {"absorption_stderr", curve.absorption_stderr},
          {"absorbed_trials", curve.absorbed_trials},
          {"gamma", gamma},
          {"t_gamma", tg.reached ? json(tg.t) : json(nullptr)},
          {"grid_points", curve.grid.size()}};
}

json gaussian_json(const analysis::GaussianBoundReport& r) {
  return {{"t_max", r.t_max},
          {"lazy_prob", r.lazy_prob},
          {"feasible", r.feasible},
          {"c3", r.c3},
          {"c4", r.c4},
          {"violations", r.violations.size()},
          {"checked_triples", r.checked_triples},
          {"pass", r.feasible && r.violations.empty()}};
}

json analyze_regularity(const Graph& g, const AnalyzeArgs& a) {
  analysis::RegularityOptions o;
  o.t_max = a.t_max;
  o.lazy_prob = a.lazy;
  const auto r = analysis::regularity_report(g, o);
  json j = {{"c0", r.neighborhood.c0_best},
            {"c1", r.neighborhood.c1_best},
            {"neighborhood_pass", r.neighborhood_pass},
            {"sampled", r.neighborhood.sampled},
            {"c5", r.doubling.c5_best}};
  if (r.isoperimetry) {
    j["isoperimetry"] = {{"value", r.isoperimetry->value},
                         {"exact", r.isoperimetry->exact},
                         {"label", r.isoperimetry->label}};
  }
  if (r.gaussian) j["gaussian"] = gaussian_json(*r.gaussian);
  return j;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const Selected sel = select_graph(a.graph);
  const Graph& g = sel.graph;
  json report;
  report["what"] = a.what;
  report["graph"] = sel.spec.describe();
  report["n"] = g.size();
  report["edges"] = g.edge_count();
  json body;
  if (a.what == "hitting") {
    body = analyze_hitting(g);
  } else if (a.what == "resistance") {
    body = analyze_resistance(g);
  } else if (a.what == "meeting") {
    body = analyze_meeting(g);
  } else if (a.what == "decay") {
    body = analyze_decay(g, a);
  } else if (a.what == "regularity") {
    body = analyze_regularity(g, a);
  } else if (a.what == "gaussian") {
    body = gaussian_json(analysis::check_gaussian_bound(g, a.t_max, a.lazy));
  } else if (a.what == "spectral") {
    const auto s = analysis::spectral_gap(g);
    body = {{"lambda2", s.lambda2}, {"lambda_min", s.lambda_min}, {"gap", s.gap}};
  } else {
    throw UsageError("--what must be hitting, resistance, meeting, decay, regularity, gaussian or spectral");
  }
  for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = it.value();
  const std::string text = report.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_file(a.out, text);
  }
  return 0;
}

// ---- scale ----------------------------------------------------------------

struct ScaleArgs {
  std::string config;
  std::size_t jobs = 1;
  std::string out;
};

std::string report_table(const SuiteReport& rep) {
  int width = 6;
  for (const auto& c : rep.cells) width = std::max(width, static_cast<int>(c.name.size()) + 2);
  std::ostringstream os;
  os << std::left << std::setw(width) << "cell" << std::setw(8) << "pass" << std::setw(12) << "slope"
     << std::setw(10) << "r2" << "reason\n";
  for (const auto& c : rep.cells) {
    os << std::setw(width) << c.name << std::setw(8) << (!c.enabled ? "-" : c.pass ? "yes" : "no")
       << std::setw(12) << format_double(std::round(c.fit.slope * 1e4) / 1e4) << std::setw(10)
       << format_double(std::round(c.fit.r_squared * 1e4) / 1e4) << c.reason << '\n';
  }
  os << "all_pass: " << (rep.all_pass() ? "true" : "false") << '\n';
  return os.str();
}

int cmd_scale(const ScaleArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const std::string text = read_file(a.config);
  json probe;
  try {
    probe = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  if (!probe.is_object() || !probe.contains("cells")) {
    // A single experiment: sweep and aggregate only.
    const auto config = parse_experiment_config(text);
    config.validate();
    const std::string canonical = canonical_json(config);
    const std::string hash = sha256_hex(canonical);
    const fs::path dir = make_run_dir(output_root(a.out.empty() ? config.output_dir : a.out), hash);
    write_file(dir / "config.json", canonical);
    ExperimentConfig c = config;
    c.jobs = std::max(a.jobs, config.jobs);
    std::ostringstream csv;
    write_summary_csv(csv, aggregate(c, run_trials(c)));
    write_file(dir / "summary.csv", csv.str());
    write_manifest(dir, "scale", hash, config.master_seed, started, {"config.json", "summary.csv"});
    out << csv.str();
    err << "run directory: " << dir.string() << '\n';
    return 0;
  }

  const Suite suite = parse_suite(text);
  const std::string canonical = canonical_json(suite);
  const std::string hash = sha256_hex(canonical);
  const fs::path dir = make_run_dir(output_root(a.out), hash);
  write_file(dir / "config.json", canonical);
  const SuiteReport rep = table1_report(suite, a.jobs);

  std::vector<AggregateRecord> records;
  for (const auto& c : rep.cells) records.insert(records.end(), c.records.begin(), c.records.end());
  std::ostringstream csv;
  write_summary_csv(csv, records);
  write_file(dir / "summary.csv", csv.str());
  write_file(dir / "fits.json", fits_json(rep));
  const std::string table = report_table(rep);
  write_file(dir / "report.txt", table);
  write_manifest(dir, "scale", hash, suite.master_seed, started,
                 {"config.json", "summary.csv", "fits.json", "report.txt"});
  out << table;
  err << "run directory: " << dir.string() << '\n';
  return rep.all_pass() ? 0 : kCheckFailed;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token-gossip simulation lab", "tokgossip"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a graph file");
  add_graph_options(g, gen.graph, false);
  g->add_option("--seed", gen.graph.seed, "generator seed");
  g->add_option("--out", gen.out, "output file (stdout when omitted)");

  RunArgs run;
  auto* r = app.add_subcommand("run", "run protocol trials");
  add_graph_options(r, run.graph, true);
  r->add_option("--proto", run.proto, "srw|crw|gossip|two_phase|hybrid_k")->capture_default_str();
  r->add_option("--fusion", run.fusion, "sum|max|wavg");
  r->add_option("--trials", run.trials)->capture_default_str();
  r->add_option("--seed", run.seed, "master seed")->capture_default_str();
  r->add_option("--values", run.values, "spike|ones|uniform|slowest_mode or a values file");
  r->add_option("--low", run.low)->capture_default_str();
  r->add_option("--high", run.high)->capture_default_str();
  r->add_option("--value-seed", run.value_seed)->capture_default_str();
  r->add_option("--clock", run.clock, "continuous|discrete")->capture_default_str();
  r->add_option("--lazy", run.lazy, "discrete-mode lazy probability")->capture_default_str();
  r->add_option("--gamma", run.gamma, "two-phase switch target (number or log_n)");
  r->add_option("--switch-time", run.switch_time, "explicit two-phase switch time");
  r->add_option("--pilot-trials", run.pilot_trials)->capture_default_str();
  r->add_option("--eps", run.eps, "gossip accuracy")->capture_default_str();
  r->add_option("--messages-per-exchange", run.messages_per_exchange)->capture_default_str();
  r->add_option("--k", run.k, "hybrid token count")->capture_default_str();
  r->add_option("--horizon", run.horizon, "hybrid run length")->capture_default_str();
  r->add_option("--max-time", run.max_time, "safety limit on simulated time");
  r->add_option("--jobs", run.jobs, "worker threads")->capture_default_str();
  r->add_option("--out", run.out, "output root (default $TOKGOSSIP_OUT or ./runs)");
  r->add_flag("--no-traces", run.no_traces, "skip per-trial trace files");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "random-walk analyses of a graph");
  add_graph_options(a, an.graph, true);
  a->add_option("--what", an.what, "hitting|resistance|meeting|decay|regularity|gaussian|spectral")
      ->required();
  a->add_option("--tmax", an.t_max)->capture_default_str();
  a->add_option("--lazy", an.lazy)->capture_default_str();
  a->add_option("--trials", an.trials, "decay trials")->capture_default_str();
  a->add_option("--seed", an.seed)->capture_default_str();
  a->add_option("--gamma", an.gamma, "decay target (default ceil(ln n))");
  a->add_option("--out", an.out, "report file (stdout when omitted)");
  a->add_option("--csv", an.csv, "decay curve CSV");

  ScaleArgs sc;
  auto* s = app.add_subcommand("scale", "scaling sweep or suite from a JSON config");
  s->add_option("config", sc.config, "config file")->required();
  s->add_option("--jobs", sc.jobs)->capture_default_str();
  s->add_option("--out", sc.out, "output root (default $TOKGOSSIP_OUT or ./runs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ErrorCategory::Usage);
  }

  try {
    if (*g) return cmd_gen(gen, out, err);
    if (*r) return cmd_run(run, out, err);
    if (*a) return cmd_analyze(an, out);
    return cmd_scale(sc, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::Usage);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::Usage);
  }
}

}  // namespace tokgossip::cli
