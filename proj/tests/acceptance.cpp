// Acceptance suite: one PASS/FAIL line per criterion. The whole suite runs
// twice with the same master seed; the last criterion compares every
// output file of the two runs byte for byte.
//
// usage: acceptance [output_dir] [--strict]
//   --strict  exit nonzero when any criterion fails (default: report only)

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tokgossip/analysis.hpp"
#include "tokgossip/experiments.hpp"

using namespace tokgossip;
using namespace tokgossip::experiments;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMasterSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::uint64_t seed = kMasterSeed;
  std::map<std::string, std::string> files;
  // Shared torus CRW sweep (criteria 5 and 6).
  std::optional<std::vector<AggregateRecord>> torus_crw;
};

std::string fmt(double x) { return format_double(x); }

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::uint64_t sub_seed(const Context& c, std::uint64_t id) { return derive_stream_seed(c.seed, id); }

std::vector<NodeId> all_nodes(const Graph& g) {
  std::vector<NodeId> v(g.size());
  std::iota(v.begin(), v.end(), NodeId{0});
  return v;
}

const AggregateRecord& record(const std::vector<AggregateRecord>& recs, std::size_t n,
                              std::string_view metric) {
  for (const auto& r : recs)
    if (r.n == n && r.metric == metric) return r;
  throw UsageError("no record for n = " + std::to_string(n) + " metric " + std::string(metric));
}

FusionValue expected_fold(FusionKind kind, const std::vector<std::int64_t>& x) {
  if (kind == FusionKind::Sum) return SumValue{std::accumulate(x.begin(), x.end(), std::int64_t{0})};
  return MaxValue{*std::max_element(x.begin(), x.end())};
}

// ---- 1 --------------------------------------------------------------------

Outcome exactness(Context& c) {
  RngStream rng(sub_seed(c, 1), 0);
  const char* families[] = {"ring", "torus", "clique", "rgg", "grid2d"};
  const ProtocolKind kinds[] = {ProtocolKind::Srw, ProtocolKind::Crw, ProtocolKind::TwoPhase};
  std::ostringstream csv;
  csv << "combo,graph,n,protocol,fusion,clock,exact\n";
  std::size_t exact = 0, total = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t f = rng.uniform_index(5);
    GraphSpec spec;
    switch (f) {
      case 0: spec = GraphSpec::ring(3 + rng.uniform_index(398)); break;
      case 1: spec = GraphSpec::torus(3 + rng.uniform_index(18), 2); break;
      case 2: spec = GraphSpec::clique(2 + rng.uniform_index(199)); break;
      case 3: spec = GraphSpec::rgg(16 + rng.uniform_index(385), rng.next_u64()); break;
      default: spec = GraphSpec::grid2d(2 + rng.uniform_index(19)); break;
    }
    const Graph g = generate(spec);
    const ProtocolKind kind = kinds[rng.uniform_index(3)];
    const FusionKind fk = rng.bernoulli(0.5) ? FusionKind::Sum : FusionKind::Max;
    const ClockMode mode = rng.bernoulli(0.5) ? ClockMode{ContinuousClock{}} : ClockMode{SynchronousDiscrete{0.5}};
    const FusionSpec fusion(fk);
    std::vector<std::int64_t> x(g.size());
    for (auto& v : x) v = static_cast<std::int64_t>(rng.uniform_index(2000001)) - 1000000;
    std::vector<FusionValue> values;
    for (auto v : x) values.push_back(fusion.from_integer(v));
    const FusionValue want = expected_fold(fk, x);
    const std::uint64_t seed = rng.next_u64();

    bool ok = false;
    if (kind == ProtocolKind::TwoPhase) {
      TargetGamma tg;
      tg.gamma = std::max(1.0, std::ceil(std::log(static_cast<double>(g.size()))));
      tg.pilot_trials = 50;
      tg.pilot_seed = derive_stream_seed(seed, 1);
      const Trace tr = two_phase_run(g, values, fusion, tg, mode, seed, 0);
      ok = tr.complete && tr.final_payload && tr.final_payload->value == want &&
           std::all_of(tr.final_count.begin(), tr.final_count.end(),
                       [&](std::uint64_t k) { return k == g.size(); });
    } else {
      ProtocolParams params;
      params.mode = mode;
      auto state = SimState::init(kind, g, values, fusion, params, seed, 0);
      const Trace tr = run(state, UntilTermination{});
      ok = tr.complete && tr.terminated && tr.final_payload && tr.final_payload->count == g.size() &&
           tr.final_payload->value == want;
    }
    exact += ok;
    ++total;
    csv << i << ',' << spec.describe() << ',' << g.size() << ',' << to_string(kind) << ','
        << to_string(fk) << ',' << describe(mode) << ',' << (ok ? 1 : 0) << '\n';
  }
  c.files["c01_exactness.csv"] = csv.str();
  return {exact == total, std::to_string(exact) + "/" + std::to_string(total) + " combinations exact"};
}

// ---- 2 --------------------------------------------------------------------

Outcome conservation(Context& c) {
  const GraphSpec specs[] = {GraphSpec::ring(32), GraphSpec::torus(6, 2), GraphSpec::clique(20),
                             GraphSpec::grid2d(8), GraphSpec::rgg(100, 5), GraphSpec::path(15)};
  std::ostringstream csv;
  csv << "graph,protocol,clock,trial,events,violations\n";
  std::uint64_t events = 0, violations = 0;
  const FusionSpec fusion(FusionKind::Sum);
  for (const auto& spec : specs) {
    const Graph g = generate(spec);
    for (ProtocolKind kind : {ProtocolKind::Srw, ProtocolKind::Crw}) {
      for (const ClockMode mode : {ClockMode{ContinuousClock{}}, ClockMode{SynchronousDiscrete{0.5}}}) {
        for (std::uint64_t trial = 0; trial < 3; ++trial) {
          std::vector<FusionValue> x;
          std::int64_t sum = 0;
          for (NodeId v = 0; v < g.size(); ++v) {
            const std::int64_t val = static_cast<std::int64_t>((v * 7919 + trial * 104729) % 1001) - 500;
            x.push_back(SumValue{val});
            sum += val;
          }
          ProtocolParams params;
          params.mode = mode;
          auto state = SimState::init(kind, g, x, fusion, params, sub_seed(c, 2), trial);
          std::uint64_t ev = 0, bad = 0;
          RunOptions opts;
          opts.observer = [&](const SimState& s) {
            ++ev;
            std::int64_t vs = 0;
            std::uint64_t cs = 0;
            for (const auto& node : s.nodes()) {
              vs += std::get<SumValue>(node.value).value;
              cs += node.count;
            }
            if (vs != sum || cs != g.size()) ++bad;
          };
          run(state, UntilTermination{}, opts);
          events += ev;
          violations += bad;
          csv << spec.describe() << ',' << to_string(kind) << ',' << describe(mode) << ',' << trial << ','
              << ev << ',' << bad << '\n';
        }
      }
    }
  }
  c.files["c02_conservation.csv"] = csv.str();
  return {violations == 0 && events > 0,
          std::to_string(violations) + " violations over " + std::to_string(events) + " events"};
}

// ---- 3 --------------------------------------------------------------------

Outcome clique_oracle(Context& c) {
  ExperimentConfig cfg;
  cfg.name = "clique50";
  cfg.sweep = {GraphSpec::clique(50)};
  cfg.trials = 2000;
  cfg.master_seed = sub_seed(c, 3);
  const auto recs = aggregate(cfg, run_trials(cfg));
  const double n = 50;
  double oracle = 0;  // death chain: k tokens merge at rate k(k-1)/(n-1)
  for (int k = 2; k <= 50; ++k) oracle += (n - 1) / (k * (k - 1.0));
  const double mean = record(recs, 50, "tau").mean;
  const double rel = std::abs(mean - oracle) / oracle;
  std::ostringstream csv;
  write_summary_csv(csv, recs);
  c.files["c03_clique.csv"] = csv.str();
  return {rel <= 0.05, "mean tau " + fixed(mean) + " vs oracle " + fixed(oracle) + " (rel err " +
                           fixed(100 * rel, 2) + "%)"};
}

// ---- 4 --------------------------------------------------------------------

Outcome srw_identity(Context& c) {
  ExperimentConfig cfg;
  cfg.name = "srw_identity";
  cfg.sweep = {GraphSpec::ring(64), GraphSpec::torus(8, 2)};
  cfg.protocol.kind = ProtocolKind::Srw;
  cfg.trials = 1000;
  cfg.master_seed = sub_seed(c, 4);
  const auto s = run_trials(cfg);
  std::ostringstream csv;
  csv << "graph,mean_tau,mean_eta,diff,paired_se,unpaired_se\n";
  bool ok = true;
  std::string detail;
  for (std::size_t p = 0; p < cfg.sweep.size(); ++p) {
    std::vector<double> tau, eta, diff;
    for (const auto& t : s) {
      if (t.point != p) continue;
      tau.push_back(t.tau);
      eta.push_back(static_cast<double>(t.messages));
      diff.push_back(static_cast<double>(t.messages) - t.tau);
    }
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    auto se = [&](const std::vector<double>& v) {
      const double m = mean(v);
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::sqrt(ss / (v.size() - 1) / v.size());
    };
    const double d = mean(eta) - mean(tau);
    const double joint = se(diff);  // per-trial pairs share one run
    const double unpaired = std::hypot(se(tau), se(eta));
    ok = ok && std::abs(d) < 3 * joint;
    csv << cfg.sweep[p].describe() << ',' << fmt(mean(tau)) << ',' << fmt(mean(eta)) << ',' << fmt(d) << ','
        << fmt(joint) << ',' << fmt(unpaired) << '\n';
    detail += (p ? "; " : "") + cfg.sweep[p].describe() + " |diff| = " + fixed(std::abs(d), 3) + " < 3*" +
              fixed(joint, 3);
  }
  c.files["c04_srw_identity.csv"] = csv.str();
  return {ok, detail};
}

// ---- 5, 6 -----------------------------------------------------------------

const std::vector<AggregateRecord>& torus_crw(Context& c) {
  if (!c.torus_crw) {
    ExperimentConfig cfg;
    cfg.name = "torus_crw";
    for (std::size_t side : {8u, 16u, 24u, 32u}) cfg.sweep.push_back(GraphSpec::torus(side, 2));
    cfg.trials = 200;
    cfg.master_seed = sub_seed(c, 5);
    c.torus_crw = aggregate(cfg, run_trials(cfg));
    std::ostringstream csv;
    write_summary_csv(csv, *c.torus_crw);
    c.files["c05_torus_crw_summary.csv"] = csv.str();
  }
  return *c.torus_crw;
}

Outcome torus_time(Context& c) {
  const auto fit = fit_scaling(torus_crw(c), "tau", "side2_log_side");
  c.files["c05_fit.json"] = fits_json(std::span<const ScalingFit>(&fit, 1));
  return {fit.slope >= 0.85 && fit.slope <= 1.15 && fit.r_squared >= 0.95,
          "slope " + fixed(fit.slope) + " in [0.85, 1.15], r2 " + fixed(fit.r_squared) + " >= 0.95"};
}

Outcome torus_messages(Context& c) {
  const auto& recs = torus_crw(c);
  const auto fit = fit_scaling(recs, "eta_per_node", "log2_n");
  c.files["c06_fit.json"] = fits_json(std::span<const ScalingFit>(&fit, 1));
  bool cap = true;
  std::string worst;
  for (const auto& r : recs) {
    if (r.metric != "eta_per_node") continue;
    const double limit = 0.05 * static_cast<double>(r.n);
    if (r.mean > limit) {
      cap = false;
      worst += " n=" + std::to_string(r.n) + ": " + fixed(r.mean, 2) + " > " + fixed(limit, 2) + ";";
    }
  }
  const bool ok = fit.slope > 0 && fit.r_squared >= 0.9 && cap;
  return {ok, "slope " + fixed(fit.slope) + " > 0, r2 " + fixed(fit.r_squared) + " >= 0.9, per-node <= 0.05n: " +
                  (cap ? std::string("all points") : "violated at" + worst)};
}

// ---- 7 --------------------------------------------------------------------

Outcome gossip_contrast(Context& c) {
  std::vector<AggregateRecord> recs;
  std::ostringstream csv;
  csv << "n,k_hat,per_node,mean_passage\n";
  std::size_t point = 0;
  for (std::size_t side : {8u, 16u, 24u, 32u}) {
    const Graph g = generate(GraphSpec::torus(side, 2));
    const auto p = GossipMatrix::uniform(g);
    const auto k = measure_gossip_K(g, p, 0.01, slowest_mode(p), 100, sub_seed(c, 70 + point++));
    AggregateRecord r;
    r.n = g.size();
    r.side = side;
    r.dim = 2;
    r.metric = "eta_per_node";
    r.mean = static_cast<double>(k.k_hat) / static_cast<double>(g.size());
    r.trials = 100;
    recs.push_back(r);
    csv << g.size() << ',' << k.k_hat << ',' << fmt(r.mean) << ',' << fmt(k.mean_passage) << '\n';
  }
  const auto fit = fit_scaling(recs, "eta_per_node", "n");
  c.files["c07_gossip.csv"] = csv.str();
  c.files["c07_fit.json"] = fits_json(std::span<const ScalingFit>(&fit, 1));
  return {fit.slope >= 0.8, "slope " + fixed(fit.slope) + " >= 0.8 (r2 " + fixed(fit.r_squared) + ")"};
}

// ---- 8 --------------------------------------------------------------------

Outcome flooding(Context& c) {
  const GraphSpec specs[] = {GraphSpec::ring(6),     GraphSpec::torus(5, 2), GraphSpec::clique(10),
                             GraphSpec::grid2d(7),   GraphSpec::rgg(100, 3), GraphSpec::path(9),
                             GraphSpec::random_regular(50, 3, 4)};
  const FusionSpec fusion(FusionKind::Sum);
  std::ostringstream csv;
  csv << "graph,clock,origins,transmissions,max_per_origin,two_e,complete,rounds,eccentricity\n";
  bool bound = true, rounds_ok = true, ring_ok = false;
  std::size_t floods = 0;
  RngStream rng(sub_seed(c, 8), 0);
  for (const auto& spec : specs) {
    const Graph g = generate(spec);
    const std::uint64_t two_e = g.total_degree();
    const bool exact_rounds = spec.family == Family::Ring || spec.family == Family::Torus;
    for (const ClockMode mode : {ClockMode{SynchronousDiscrete{0.0}}, ClockMode{ContinuousClock{}}}) {
      // Single origin at every node.
      for (NodeId o = 0; o < g.size(); ++o) {
        const auto r = cfld_run(g, {{o, {SumValue{1}, g.size()}}}, fusion, mode, rng);
        ++floods;
        const bool ok = r.complete && r.per_origin_transmissions[0] <= two_e &&
                        std::all_of(r.node_payload.begin(), r.node_payload.end(),
                                    [&](const TokenPayload& p) { return p.count == g.size(); });
        bound = bound && ok;
        const auto ecc = eccentricity(g, o);
        if (!is_continuous(mode)) {
          if (exact_rounds && r.completion_time != ecc) rounds_ok = false;
          if (spec.family == Family::Ring && g.size() == 6 && o == 0) {
            ring_ok = r.completion_time == 3 && r.transmissions == 6;
          }
        }
        csv << spec.describe() << ',' << describe(mode) << ",1," << r.transmissions << ','
            << r.per_origin_transmissions[0] << ',' << two_e << ',' << r.complete << ','
            << fmt(r.completion_time) << ',' << ecc << '\n';
      }
      // Several origins splitting the counts, as after a two-phase handoff.
      std::vector<FloodOrigin> origins;
      std::uint64_t left = g.size();
      for (NodeId o = 0; o < g.size() && left > 0; o += 1 + static_cast<NodeId>(rng.uniform_index(4))) {
        const std::uint64_t k = std::min<std::uint64_t>(left, 1 + rng.uniform_index(3));
        origins.push_back({o, {SumValue{static_cast<std::int64_t>(o)}, k}});
        left -= k;
      }
      origins.front().payload.count += left;
      const auto r = cfld_run(g, origins, fusion, mode, rng);
      ++floods;
      const auto mx = *std::max_element(r.per_origin_transmissions.begin(), r.per_origin_transmissions.end());
      bound = bound && r.complete && mx <= two_e &&
              std::all_of(r.node_payload.begin(), r.node_payload.end(),
                          [&](const TokenPayload& p) { return p.count == g.size(); });
      csv << spec.describe() << ',' << describe(mode) << ',' << origins.size() << ',' << r.transmissions << ','
          << mx << ',' << two_e << ',' << r.complete << ',' << fmt(r.completion_time) << ",\n";
    }
  }
  c.files["c08_flooding.csv"] = csv.str();
  return {bound && rounds_ok && ring_ok,
          std::to_string(floods) + " floods within 2|E| and complete: " + (bound ? "yes" : "no") +
              "; eccentricity rounds on ring/torus: " + (rounds_ok ? "yes" : "no") +
              "; ring(6) 3 rounds / 6 transmissions: " + (ring_ok ? "yes" : "no")};
}

// ---- 9 --------------------------------------------------------------------

Outcome two_phase_bound(Context& c) {
  std::ostringstream csv;
  csv << "n,gamma,t_gamma,n_hat,m_hat,sum_degree,mean_messages,stderr,bound,exact\n";
  bool ok = true;
  std::string detail;
  const FusionSpec fusion(FusionKind::Sum);
  for (std::size_t side : {16u, 32u, 64u}) {
    const Graph g = generate(GraphSpec::grid2d(side));
    const std::size_t n = g.size();
    const double gamma = std::ceil(std::log(static_cast<double>(n)));
    const std::uint64_t seed = sub_seed(c, 90 + side);
    const auto curve = analysis::estimate_decay(g, 200, {}, derive_stream_seed(seed, 1));
    const auto tg = curve.t_gamma(gamma);
    const std::size_t idx = curve.index_at_or_before(tg.t);
    const double m_hat = curve.m_hat[idx], n_hat = curve.n_hat[idx];

    const std::size_t trials = 100;
    std::vector<double> msgs;
    std::size_t exact = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      std::vector<std::int64_t> x(n);
      RngStream vr(derive_stream_seed(seed, 2), t);
      for (auto& v : x) v = static_cast<std::int64_t>(vr.uniform_index(1000));
      std::vector<FusionValue> values(n);
      for (std::size_t i = 0; i < n; ++i) values[i] = SumValue{x[i]};
      const Trace tr = two_phase_run(g, values, fusion, ExplicitTime{tg.t}, ContinuousClock{}, seed, t);
      const bool all = tr.consensus && tr.final_payload && tr.final_payload->value == expected_fold(FusionKind::Sum, x) &&
                       std::all_of(tr.final_count.begin(), tr.final_count.end(), [&](std::uint64_t k) { return k == n; });
      exact += all;
      msgs.push_back(static_cast<double>(tr.total_messages));
    }
    const double mean = std::accumulate(msgs.begin(), msgs.end(), 0.0) / trials;
    double ss = 0;
    for (double m : msgs) ss += (m - mean) * (m - mean);
    const double se = std::sqrt(ss / (trials - 1) / trials);
    const double sum_deg = static_cast<double>(g.total_degree());
    const double bound = m_hat + 2 * sum_deg * n_hat + 3 * se;
    const bool point_ok = exact == trials && mean <= bound;
    ok = ok && point_ok;
    csv << n << ',' << gamma << ',' << fmt(tg.t) << ',' << fmt(n_hat) << ',' << fmt(m_hat) << ',' << sum_deg << ','
        << fmt(mean) << ',' << fmt(se) << ',' << fmt(bound) << ',' << exact << '\n';
    detail += (detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + " exact " +
              std::to_string(exact) + "/" + std::to_string(trials) + ", msgs " + fixed(mean, 0) + " <= " +
              fixed(bound, 0);
  }
  c.files["c09_two_phase.csv"] = csv.str();
  return {ok, detail};
}

// ---- 10 -------------------------------------------------------------------

Outcome resistance_bounds(Context& c) {
  std::ifstream in(std::string(TOKGOSSIP_CONFIG_DIR) + "/table1.json");
  std::ostringstream text;
  text << in.rdbuf();
  const Suite suite = parse_suite(text.str());
  std::map<std::string, GraphSpec> graphs;
  for (const auto& cell : suite.cells)
    for (const auto& s : cell.experiment.sweep) graphs.emplace(s.describe(), s);

  std::ostringstream csv;
  csv << "check,graph,n,value,bound,ok\n";
  bool hit_ok = true, meet_ok = true, ring_ok = true;
  std::size_t meet_graphs = 0;
  for (const auto& [name, spec] : graphs) {
    const Graph g = generate(spec);
    const double sigma = analysis::worst_case_hitting(g);
    const double bound = analysis::resistance_report(g).hitting_bound;
    const bool ok = sigma <= bound * (1 + 1e-12);
    hit_ok = hit_ok && ok;
    csv << "sigma_vs_resistance," << name << ',' << g.size() << ',' << fmt(sigma) << ',' << fmt(bound) << ',' << ok << '\n';
  }

  std::vector<GraphSpec> small;
  for (const auto& [name, spec] : graphs)
    if (spec.node_count() <= 36) small.push_back(spec);
  for (std::size_t n = 3; n <= 36; n += 3) {
    small.push_back(GraphSpec::ring(n));
    small.push_back(GraphSpec::clique(n));
    small.push_back(GraphSpec::path(n));
  }
  for (std::size_t s = 2; s <= 6; ++s) small.push_back(GraphSpec::grid2d(s));
  for (std::size_t s = 3; s <= 6; ++s) small.push_back(GraphSpec::torus(s, 2));
  small.push_back(GraphSpec::torus(3, 3));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    small.push_back(GraphSpec::rgg(20, seed));
    small.push_back(GraphSpec::rgg(36, seed));
    small.push_back(GraphSpec::random_regular(36, 3, seed));
  }
  for (const auto& spec : small) {
    const Graph g = generate(spec);
    const auto m = analysis::mean_meeting_times(g);
    const double mx = analysis::worst_case_meeting(m), sigma = analysis::worst_case_hitting(g);
    const bool ok = m.exact && mx <= sigma * (1 + 1e-9);
    meet_ok = meet_ok && ok;
    ++meet_graphs;
    csv << "meeting_vs_sigma," << spec.describe() << ',' << g.size() << ',' << fmt(mx) << ',' << fmt(sigma) << ','
        << ok << '\n';
  }

  double worst_err = 0;
  for (std::size_t n : {5u, 16u, 64u, 255u}) {
    const auto h = analysis::mean_hitting_times(generate(GraphSpec::ring(n)));
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = 0; v < n; ++v) {
        const double d = static_cast<double>(std::min<std::size_t>((u + n - v) % n, (v + n - u) % n));
        worst_err = std::max(worst_err, std::abs(h.at(u, v) - d * (static_cast<double>(n) - d)));
      }
    }
  }
  ring_ok = worst_err <= 1e-6;
  csv << "ring_closed_form,ring(5..255),," << fmt(worst_err) << ",1e-06," << ring_ok << '\n';
  c.files["c10_resistance.csv"] = csv.str();
  return {hit_ok && meet_ok && ring_ok,
          "sigma <= 2|E|rho* on " + std::to_string(graphs.size()) + " suite graphs: " + (hit_ok ? "yes" : "no") +
              "; max meeting <= sigma on " + std::to_string(meet_graphs) + " graphs: " + (meet_ok ? "yes" : "no") +
              "; ring hitting max error " + fmt(worst_err)};
}

// ---- 11 -------------------------------------------------------------------

Outcome car_bound(Context& c) {
  std::ostringstream csv;
  csv << "graph,b_size,s,lhs,lhs_se,alpha,rhs,combined_se,holds\n";
  bool ok = true;
  std::size_t checks = 0;
  for (const auto& spec : {GraphSpec::clique(5), GraphSpec::ring(8)}) {
    const Graph g = generate(spec);
    const auto a = all_nodes(g);
    const std::vector<NodeId> half(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2 + 1));
    for (const auto* b : {&a, &half}) {
      for (double s : {0.5, 1.0, 2.0, 4.0}) {
        const auto r = analysis::check_car_bound(g, *b, a, s, 4000, sub_seed(c, 110 + checks));
        ++checks;
        ok = ok && r.holds;
        csv << spec.describe() << ',' << b->size() << ',' << fmt(s) << ',' << fmt(r.lhs.mean) << ','
            << fmt(r.lhs.standard_error) << ',' << fmt(r.alpha.alpha) << ',' << fmt(r.rhs) << ','
            << fmt(r.combined_se) << ',' << r.holds << '\n';
      }
    }
  }
  c.files["c11_car_bound.csv"] = csv.str();
  return {ok, std::to_string(checks) + " (graph, B, s) checks within 3 combined SE: " + (ok ? "all" : "not all")};
}

// ---- 12 -------------------------------------------------------------------

Outcome decay_shape(Context& c) {
  std::ostringstream csv;
  csv << "N,n,sup_value,t_at_sup,points\n";
  std::map<std::size_t, double> sup;
  for (std::size_t side : {8u, 16u, 32u}) {
    const Graph g = generate(GraphSpec::torus(side, 2));
    const auto curve = analysis::estimate_decay(g, 200, {}, sub_seed(c, 120 + side));
    const double n = static_cast<double>(g.size());
    double best = 0, best_t = 0;
    std::size_t points = 0;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      const double t = curve.grid[i];
      if (t <= 0 || curve.n_hat[i] < 2.0) continue;  // the many-token regime
      ++points;
      const double v = t * curve.n_hat[i] / (n * std::log(t + 1));
      if (v > best) best = v, best_t = t;
    }
    sup[side] = best;
    csv << side << ',' << g.size() << ',' << fmt(best) << ',' << fmt(best_t) << ',' << points << '\n';
  }
  c.files["c12_decay_shape.csv"] = csv.str();
  const double ratio = sup[32] / sup[8];
  return {ratio <= 10.0, "sup ratio N=32 / N=8 = " + fixed(ratio) + " <= 10 (" + fixed(sup[8]) + ", " +
                             fixed(sup[16]) + ", " + fixed(sup[32]) + ")"};
}

// ---- 13 -------------------------------------------------------------------

Outcome gaussian(Context& c) {
  const Graph g = generate(GraphSpec::torus(15, 2));
  const auto r = analysis::check_gaussian_bound(g, 40, 0.5);
  // Independent check of the reported pair: propagate each row of P_t.
  std::size_t bad = 0, checked = 0;
  const std::size_t n = g.size();
  for (NodeId u = 0; u < n && r.feasible; ++u) {
    const auto dist = bfs_distances(g, u);
    std::vector<double> row(n, 0.0), next(n);
    row[u] = 1.0;
    for (std::size_t t = 1; t <= 40; ++t) {
      std::fill(next.begin(), next.end(), 0.0);
      for (NodeId v = 0; v < n; ++v) {
        next[v] += 0.5 * row[v];
        const double share = 0.5 * row[v] / static_cast<double>(g.degree(v));
        for (NodeId w : g.neighbors(v)) next[w] += share;
      }
      row.swap(next);
      for (NodeId v = 0; v < n; ++v) {
        const double d = dist[v];
        if (d < 1 || d > t) continue;
        ++checked;
        const double td = static_cast<double>(t);
        if (r.c3 / td * std::exp(-d * d / (r.c4 * td)) > row[v] * (1 + 1e-9)) ++bad;
      }
    }
  }
  std::ostringstream js;
  js << "{\n  \"feasible\": " << (r.feasible ? "true" : "false") << ",\n  \"c3\": " << fmt(r.c3)
     << ",\n  \"c4\": " << fmt(r.c4) << ",\n  \"violations\": " << r.violations.size()
     << ",\n  \"independent_checks\": " << checked << ",\n  \"independent_failures\": " << bad << "\n}\n";
  c.files["c13_gaussian.json"] = js.str();
  const bool ok = r.feasible && r.violations.empty() && r.c3 > 0 && bad == 0 && checked > 0;
  return {ok, "C3 = " + fixed(r.c3) + ", C4 = " + fixed(r.c4) + ", " + std::to_string(r.violations.size()) +
                  " violations, " + std::to_string(bad) + "/" + std::to_string(checked) +
                  " independent triple failures"};
}

// ---- driver ---------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(Context&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "exactness", exactness},
      {2, "conservation", conservation},
      {3, "clique coalescence oracle", clique_oracle},
      {4, "SRW message-time identity", srw_identity},
      {5, "torus CRW time scaling", torus_time},
      {6, "torus CRW per-node messages", torus_messages},
      {7, "gossip per-node contrast", gossip_contrast},
      {8, "CFLD bounds", flooding},
      {9, "two-phase consensus and messages", two_phase_bound},
      {10, "resistance and hitting bounds", resistance_bounds},
      {11, "coalescence count bound", car_bound},
      {12, "token decay shape", decay_shape},
      {13, "Gaussian bound feasibility", gaussian},
  };
  return list;
}

std::string line(int id, const char* name, const Outcome& o) {
  char head[128];
  std::snprintf(head, sizeof head, "[%s] %2d %s: ", o.pass ? "PASS" : "FAIL", id, name);
  return head + o.detail;
}

std::map<std::string, std::string> run_suite(const fs::path& dir, std::vector<std::string>& lines,
                                             std::vector<bool>& passes) {
  Context ctx;
  for (const auto& c : criteria()) {
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    lines.push_back(line(c.id, c.name, o));
    passes.push_back(o.pass);
  }
  std::string report;
  for (const auto& l : lines) report += l + "\n";
  ctx.files["report.txt"] = report;
  fs::create_directories(dir);
  for (const auto& [name, bytes] : ctx.files) std::ofstream(dir / name, std::ios::binary) << bytes;
  return ctx.files;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") {
      strict = true;
    } else {
      out = a;
    }
  }
  std::vector<std::string> lines1, lines2;
  std::vector<bool> pass1, pass2;
  const auto files1 = run_suite(out / "run1", lines1, pass1);
  for (const auto& l : lines1) std::printf("%s\n", l.c_str());
  std::fflush(stdout);

  const auto files2 = run_suite(out / "run2", lines2, pass2);
  std::size_t same = 0;
  std::string diff;
  for (const auto& [name, bytes] : files1) {
    const auto it = files2.find(name);
    if (it != files2.end() && it->second == bytes && slurp(out / "run1" / name) == slurp(out / "run2" / name)) {
      ++same;
    } else {
      diff += " " + name;
    }
  }
  const bool det = same == files1.size() && files1.size() == files2.size();
  const Outcome o14{det, std::to_string(same) + "/" + std::to_string(files1.size()) + " output files identical" +
                             (diff.empty() ? "" : ", differing:" + diff)};
  std::printf("%s\n", line(14, "determinism", o14).c_str());

  const std::size_t passed = std::count(pass1.begin(), pass1.end(), true) + (det ? 1 : 0);
  std::printf("%zu/14 criteria passed\n", passed);
  return strict && passed != 14 ? 1 : 0;
}
