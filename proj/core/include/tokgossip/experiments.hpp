#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokgossip/engine.hpp"
#include "tokgossip/fusion.hpp"
#include "tokgossip/graph.hpp"
#include "tokgossip/protocols.hpp"

namespace tokgossip::experiments {

/// SlowestMode is gossip-only: the worst-case start vector slowest_mode(P).
enum class ValueSource { UniformRandom, Spike, Ones, File, SlowestMode };

std::string_view to_string(ValueSource s);
ValueSource parse_value_source(std::string_view name);

struct ValueSpec {
  ValueSource source = ValueSource::UniformRandom;
  std::int64_t low = 0;    ///< uniform range, inclusive
  std::int64_t high = 1000;
  std::uint64_t seed = 0;  ///< mixed with the trial seed
  std::string path;        ///< File source
};

/// Initial per-node values. Spike is n at node 0 and 0 elsewhere.
std::vector<FusionValue> make_values(const ValueSpec& spec, const FusionSpec& fusion,
                                     std::size_t n, std::uint64_t trial_seed);
std::vector<double> make_reals(const ValueSpec& spec, std::size_t n, std::uint64_t trial_seed);
/// Gossip start vector (make_reals, or slowest_mode(p)).
std::vector<double> gossip_start(const ValueSpec& spec, const GossipMatrix& p, std::uint64_t trial_seed);

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::Crw;
  ClockMode mode = ContinuousClock{};
  FusionKind fusion = FusionKind::Sum;
  std::optional<NodeId> srw_origin;
  // two-phase: explicit switch time, explicit gamma, or ceil(ln n) when neither is set
  std::optional<double> switch_time;
  std::optional<double> gamma;
  std::size_t pilot_trials = 200;
  // gossip
  double eps = 0.01;
  unsigned messages_per_exchange = 2;
  std::uint64_t max_messages = std::numeric_limits<std::uint64_t>::max();
  // hybrid
  std::size_t k = 2;
  double horizon = 100.0;
  /// Safety limit on simulated time; exceeding it makes a trace incomplete.
  double max_time = std::numeric_limits<double>::infinity();
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<GraphSpec> sweep;
  ProtocolConfig protocol;
  ValueSpec values;
  std::size_t trials = 100;
  std::uint64_t master_seed = 1;
  std::size_t jobs = 1;
  std::string output_dir;  ///< empty: the CLI's output root

  void validate() const;
};

/// Master seed used for every trial of sweep point `point`.
std::uint64_t point_seed(std::uint64_t master_seed, std::size_t point);

struct TrialSummary {
  std::size_t point = 0;
  std::size_t n = 0;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;  ///< point seed; (seed, trial) identifies the stream
  double tau = 0;
  std::uint64_t messages = 0;
  double per_node = 0;
  bool complete = false;
  bool exact = false;      ///< final value equals the fold of the inputs
  std::uint64_t phase1_messages = 0;
  std::uint64_t phase2_messages = 0;
  double switch_time = 0;
  double max_error = 0;
};

/// Called with every finished trace before it is summarized (serialized
/// per completed task, in task order).
using TraceSink = std::function<void(std::size_t point, std::uint64_t trial, const Trace&)>;

/// Runs every (sweep point, trial) pair, possibly concurrently; the result
/// is ordered by (point, trial) regardless of scheduling. Throws
/// SimulationError naming the sweep point when a trace is incomplete.
std::vector<TrialSummary> run_trials(const ExperimentConfig& config, const TraceSink& sink = {});
/// Same, with prebuilt graphs (graphs[p] for sweep point p); the sweep
/// specs then only label the records.
std::vector<TrialSummary> run_trials(const ExperimentConfig& config, std::span<const Graph> graphs,
                                     const TraceSink& sink = {});

/// One trial; used by run_trials and by tests.
Trace run_one(const Graph& g, const ProtocolConfig& protocol, const ValueSpec& values,
              std::uint64_t seed, std::uint64_t trial, std::optional<double> switch_time = {});

/// Switch time of a two-phase sweep point (pilot CRW runs when gamma is used).
double two_phase_switch_time(const Graph& g, const ProtocolConfig& protocol, std::uint64_t seed);

struct AggregateRecord {
  std::size_t n = 0;
  std::size_t side = 0;
  std::size_t dim = 0;
  std::string graph;
  std::string protocol;
  std::string metric;
  double mean = 0;
  double standard_error = 0;  ///< bootstrap, 1000 resamples
  double min = 0;
  double max = 0;
  std::size_t trials = 0;
};

/// Mean / bootstrap SE of tau, eta and eta_per_node per sweep point
/// (plus phase1/phase2 for two-phase runs).
std::vector<AggregateRecord> aggregate(const ExperimentConfig& config,
                                       std::span<const TrialSummary> summaries);

/// `n,protocol,metric,mean,stderr,trials`
void write_summary_csv(std::ostream& out, std::span<const AggregateRecord> records);

struct ScalingFit {
  std::string metric;
  std::string predictor;
  bool log_log = true;
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::size_t points = 0;
};

/// Predictor value for a sweep point: n, n_log_n, log_n, log2_n ((ln n)^2),
/// n2, side2_log_side, n_2_over_d.
double predictor_value(std::string_view predictor, std::size_t n, std::size_t side,
                       std::size_t dim);

/// Least squares of log(mean) on log(predictor) (or linear axes). Uses the
/// records whose metric matches; requires at least 4 points.
ScalingFit fit_scaling(std::span<const AggregateRecord> records, std::string_view metric,
                       std::string_view predictor, bool log_log = true);

// ---- gossip stopping index ------------------------------------------------

struct GossipKEstimate {
  double eps = 0;
  std::uint64_t k_hat = 0;  ///< smallest k with empirical P(error at k >= eps) <= eps
  double mean_passage = 0;
  std::vector<std::uint64_t> passages;  ///< per-trial first message index below eps
};

GossipKEstimate measure_gossip_K(const Graph& g, const GossipMatrix& p, double eps,
                                 std::span<const double> z0, std::size_t trials,
                                 std::uint64_t seed,
                                 std::uint64_t max_messages = std::numeric_limits<std::uint64_t>::max(),
                                 unsigned messages_per_exchange = 2, std::size_t jobs = 1);

// ---- scaling suite ----------------------------------------------------------

enum class CellCheck { Band, MinSlope, Positive };

struct SuiteCell {
  std::string name;
  ExperimentConfig experiment;
  std::string metric;
  std::string predictor;
  CellCheck check = CellCheck::Band;
  double band = 0.15;      ///< Band: |slope - 1| <= band
  double min_slope = 0.8;  ///< MinSlope
  double min_r2 = 0.0;
  bool log_log = true;
  bool use_gossip_k = false;  ///< per-node messages from K-hat instead of trial means
  bool enabled = true;
};

struct Suite {
  std::string name = "suite";
  std::uint64_t master_seed = 1;
  std::vector<SuiteCell> cells;
};

struct CellResult {
  std::string name;
  bool enabled = true;
  std::vector<AggregateRecord> records;
  ScalingFit fit;
  bool pass = false;
  std::string reason;
};

struct SuiteReport {
  std::vector<CellResult> cells;
  bool all_pass() const;
};

std::string_view to_string(CellCheck c);
CellCheck parse_cell_check(std::string_view name);

/// Runs every enabled cell, fits it and applies its check. Gossip K-hat
/// cells record metric values k_hat / n per sweep point.
SuiteReport table1_report(const Suite& suite, std::size_t jobs = 1);

/// Config parsing and canonical serialization (JSON text). The canonical
/// form materializes every default.
ExperimentConfig parse_experiment_config(std::string_view json_text);
std::string canonical_json(const ExperimentConfig& config);
Suite parse_suite(std::string_view json_text);
std::string canonical_json(const Suite& suite);

std::string fits_json(const SuiteReport& report);
std::string fits_json(std::span<const ScalingFit> fits);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

}  // namespace tokgossip::experiments
