#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "tokgossip/protocols.hpp"

namespace tokgossip {

namespace {

nlohmann::json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

void open_for_write(std::ofstream& f, const std::filesystem::path& p) {
  f.open(p, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + p.string() + "'");
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t,active_count,total_messages\n";
  for (const auto& p : trace.points) {
    out << format_double(p.t) << ',' << p.active << ',' << p.messages << '\n';
  }
}

void write_node_csv(std::ostream& out, const Trace& trace) {
  out << "node,sends,receives,final_count\n";
  const std::size_t n = trace.sends.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << i << ',' << trace.sends[i] << ',' << (i < trace.receives.size() ? trace.receives[i] : 0)
        << ',' << (i < trace.final_count.size() ? trace.final_count[i] : 0) << '\n';
  }
}

void write_trace_json(std::ostream& out, const Trace& trace) {
  nlohmann::json j;
  const auto& m = trace.meta;
  j["metadata"] = {{"protocol", m.protocol},     {"rng_algorithm", m.rng_algorithm},
                   {"master_seed", m.master_seed}, {"trial", m.trial},
                   {"clock_mode", m.clock_mode}, {"lazy_prob", m.lazy_prob},
                   {"graph", m.graph_tag},       {"n", m.n},
                   {"fusion", m.fusion}};
  j["complete"] = trace.complete;
  j["terminated"] = trace.terminated;
  j["tau"] = number_or_null(trace.tau);
  j["total_messages"] = trace.total_messages;
  nlohmann::json sigma = nlohmann::json::array();
  for (double s : trace.sigma) sigma.push_back(number_or_null(s));
  j["sigma"] = sigma;
  if (trace.final_payload) {
    j["final_value"] = to_string(trace.final_payload->value);
    j["final_count"] = trace.final_payload->count;
  }
  j["holders"] = trace.holders.size() <= 16 ? nlohmann::json(trace.holders)
                                             : nlohmann::json(trace.holders.size());
  if (m.protocol == "two_phase") {
    j["switch_time"] = trace.switch_time;
    j["phase1_messages"] = trace.phase1_messages;
    j["phase2_messages"] = trace.phase2_messages;
    j["flood_duration"] = trace.flood_duration;
    j["consensus"] = trace.consensus;
  }
  if (trace.messages_to_eps) j["messages_to_eps"] = *trace.messages_to_eps;
  if (!trace.error_trajectory.empty()) {
    nlohmann::json e = nlohmann::json::array();
    for (const auto& [k, err] : trace.error_trajectory) e.push_back({k, number_or_null(err)});
    j["error_trajectory"] = e;
  }
  if (!trace.node_error.empty()) {
    j["max_error"] = trace.max_error;
    nlohmann::json e = nlohmann::json::array();
    for (double x : trace.node_error) e.push_back(number_or_null(x));
    j["node_error"] = e;
  }
  out << j.dump(2) << '\n';
}

void save_trace(const std::string& dir, const std::string& stem, const Trace& trace) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream f;
  open_for_write(f, fs::path(dir) / (stem + ".csv"));
  write_trace_csv(f, trace);
  f.close();
  open_for_write(f, fs::path(dir) / (stem + ".nodes.csv"));
  write_node_csv(f, trace);
  f.close();
  open_for_write(f, fs::path(dir) / (stem + ".json"));
  write_trace_json(f, trace);
}

}  // namespace tokgossip
