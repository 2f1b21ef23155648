#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokgossip/engine.hpp"
#include "tokgossip/graph.hpp"
#include "tokgossip/stats.hpp"

namespace tokgossip::analysis {

struct SolverOptions {
  std::size_t dense_limit = 5000;  ///< dense factorization up to this many nodes
  double tolerance = 1e-9;         ///< relative residual bound
};

/// Square table indexed [from][to], stored row-major.
struct NodePairTable {
  std::size_t n = 0;
  std::vector<double> values;
  double relative_residual = 0.0;

  double at(NodeId from, NodeId to) const { return values[from * n + to]; }
  double max() const;
};

// ---- hitting times --------------------------------------------------------

/// E[T_uv] in steps (equivalently unit-rate continuous time).
struct HittingTimeTable : NodePairTable {
  bool dense = true;
};

HittingTimeTable mean_hitting_times(const Graph& g, SolverOptions options = {});

/// sigma = max_{u,v} E[T_uv].
double worst_case_hitting(const HittingTimeTable& table);
double worst_case_hitting(const Graph& g);

// ---- electrical quantities ------------------------------------------------

/// Effective resistance with every edge a unit resistor: inject a unit
/// current at u, ground v, read the potential at u.
double effective_resistance(const Graph& g, NodeId u, NodeId v, SolverOptions options = {});

struct ResistanceReport {
  NodePairTable resistance;   ///< rho_uv
  double rho_star = 0;        ///< max_uv rho_uv
  NodeId argmax_u = 0;
  NodeId argmax_v = 0;
  double hitting_bound = 0;   ///< 2|E| rho*, an upper bound on sigma
};

/// All-pairs resistances via the Laplacian pseudo-inverse (dense).
ResistanceReport resistance_report(const Graph& g);

/// rho* = max_uv rho_uv.
double max_resistance(const Graph& g);

/// Resistance between A (held at potential 1) and the complement of B
/// (grounded), i.e. 1 / dissipated power. Requires A nonempty, A a subset of
/// B, and B^c nonempty.
double set_resistance(const Graph& g, std::span<const NodeId> a, std::span<const NodeId> b);

struct SpectralReport {
  double lambda2 = 0;     ///< second-largest eigenvalue of the walk matrix
  double lambda_min = 0;  ///< smallest eigenvalue
  double gap = 0;         ///< 1 - lambda2
};

/// Spectrum of D^{-1/2} A D^{-1/2} (dense; intended for expander proxies).
SpectralReport spectral_gap(const Graph& g);

// ---- meeting times --------------------------------------------------------

struct MeetingOptions {
  std::size_t state_limit = 10000;  ///< exact solve while n^2 <= state_limit
  bool allow_monte_carlo = false;   ///< fall back to simulation instead of failing
  std::size_t mc_trials = 2000;
  std::uint64_t seed = 0;
};

/// E[C_vw] for two independent unit-rate walks. `relative_residual` is set
/// for exact solves; Monte Carlo tables set `exact = false`.
struct MeetingTable : NodePairTable {
  bool exact = true;
};

MeetingTable mean_meeting_times(const Graph& g, MeetingOptions options = {});
double worst_case_meeting(const MeetingTable& table);

/// One sample of C_vw, or +inf when the walks have not met by `horizon`.
double sample_meeting_time(const Graph& g, NodeId v, NodeId w, double horizon, RngStream& rng);

struct MeetingEstimate {
  double s = 0;
  double alpha = 0;  ///< min over evaluated pairs of P(C_vw <= s)
  stats::Interval interval;
  double half_width = 0;
  NodeId argmin_v = 0;
  NodeId argmin_w = 0;
  std::size_t trials = 0;
  std::size_t pairs_evaluated = 0;
  /// When true the pair set was sampled and alpha is an estimate from above
  /// of the true minimum.
  bool subsampled = false;
};

struct AlphaOptions {
  std::size_t trials = 2000;
  std::size_t pair_limit = 10000;
  std::uint64_t seed = 0;
};

MeetingEstimate estimate_alpha(const Graph& g, std::span<const NodeId> set, double s,
                               AlphaOptions options = {});

/// alpha_s for several s from the same samples, so the curve is monotone.
std::vector<MeetingEstimate> estimate_alpha_curve(const Graph& g, std::span<const NodeId> set,
                                                  std::span<const double> s_values,
                                                  AlphaOptions options = {});

// ---- cover times ----------------------------------------------------------

struct MeanEstimate {
  double mean = 0;
  double standard_error = 0;
  std::size_t trials = 0;
  stats::Interval ci95() const {
    return {mean - 1.96 * standard_error, mean + 1.96 * standard_error};
  }
};

/// Time for a single walk from `start` to visit every node: continuous
/// unit-rate jumps, or synchronous steps (holding with the lazy probability).
MeanEstimate estimate_cover_time(const Graph& g, NodeId start, std::size_t trials,
                                 const ClockMode& mode, std::uint64_t seed);

// ---- coalescing walks and token decay ------------------------------------

/// Token-count step function of one coalescing-walk run: (time, count)
/// at every change, starting with (0, |start set|).
struct CountPath {
  std::vector<double> t;
  std::vector<std::uint32_t> count;
  bool absorbed = false;

  std::uint32_t at(double time) const;
};

/// Coalescing walks from every node (positions only). Continuous mode uses
/// thinning over the surviving tokens; discrete mode applies synchronous
/// lazy rounds with coalescence on co-location.
CountPath simulate_coalescing(const Graph& g, const ClockMode& mode, double horizon,
                              RngStream& rng);

struct DecayOptions {
  ClockMode mode = ContinuousClock{};
  /// Stop each trial at this time even if more than one token survives.
  double horizon = std::numeric_limits<double>::infinity();
  /// Explicit evaluation times; empty means a geometric grid from `t_min`
  /// to the last absorption time with `points_per_decade` points, plus t = 0.
  std::vector<double> grid;
  double t_min = 1e-2;
  std::size_t points_per_decade = 64;
};

struct GammaTime {
  double t = 0;             ///< first grid time with N_hat <= gamma
  double bracket_low = 0;   ///< previous grid time
  double bracket_high = 0;  ///< same as t
  bool reached = false;
};

struct DecayCurve {
  std::size_t n = 0;
  std::size_t trials = 0;
  bool continuous = true;
  std::vector<double> grid;
  std::vector<double> n_hat;    ///< mean active tokens
  std::vector<double> n_stderr;
  std::vector<double> m_hat;    ///< mean cumulative token-time (messages)
  std::vector<double> m_stderr;
  double mean_absorption = 0;   ///< mean tau_C over absorbed trials
  double absorption_stderr = 0;
  std::size_t absorbed_trials = 0;

  GammaTime t_gamma(double gamma) const;
  /// Values at grid index i.
  std::size_t index_at_or_before(double t) const;
};

DecayCurve estimate_decay(const Graph& g, std::size_t trials, const DecayOptions& options,
                          std::uint64_t seed);

/// Geometric time grid: 0, then t_min * 10^(k / per_decade) up to >= t_max.
std::vector<double> geometric_grid(double t_min, double t_max, std::size_t per_decade);

/// Harris-style graphical construction of coalescing walks: every node
/// carries a unit-rate clock and a neighbor choice per tick; a token on the
/// node at a tick follows the arrow. Running several start sets on the same
/// construction couples them pathwise.
class GraphicalConstruction {
 public:
  GraphicalConstruction(const Graph& g, double horizon, RngStream& rng);

  /// |Lambda_B(s)| for s <= horizon.
  std::size_t surviving(std::span<const NodeId> start, double s) const;
  /// Same for several increasing times in one pass.
  std::vector<std::size_t> surviving(std::span<const NodeId> start,
                                     std::span<const double> times) const;

 private:
  struct Arrow {
    double t;
    NodeId from;
    NodeId to;
  };
  std::size_t n_;
  double horizon_;
  std::vector<Arrow> arrows_;
};

struct CoalescingEstimate {
  double s = 0;
  double mean = 0;  ///< E|Lambda_B(s)|
  double standard_error = 0;
  std::size_t trials = 0;
};

CoalescingEstimate coalescing_oracle(const Graph& g, std::span<const NodeId> start, double s,
                                     std::size_t trials, std::uint64_t seed);

/// Coupled estimates at several times (nonincreasing in s pathwise).
std::vector<CoalescingEstimate> coalescing_curve(const Graph& g, std::span<const NodeId> start,
                                                 std::span<const double> s_values,
                                                 std::size_t trials, std::uint64_t seed);

struct PartitionLemmaResult {
  std::size_t trials = 0;
  std::size_t violations = 0;  ///< trials with |Lambda_B| > sum_j |Lambda_{B_j}|
  double mean_whole = 0;
  double mean_parts = 0;
};

/// Pathwise check of |Lambda_B(s)| <= sum_j |Lambda_{B cap A_j}(s)| on a
/// shared graphical construction.
PartitionLemmaResult check_partition_lemma(const Graph& g, std::span<const NodeId> start,
                                           const std::vector<std::vector<NodeId>>& partition,
                                           double s, std::size_t trials, std::uint64_t seed);

struct CarBoundCheck {
  double s = 0;
  CoalescingEstimate lhs;    ///< E|Lambda_B(s)|
  MeetingEstimate alpha;     ///< alpha_s(A)
  double rhs = 0;            ///< |B| - (|B| - 1) alpha
  double combined_se = 0;
  bool holds = false;        ///< lhs <= rhs + 3 combined_se
};

/// E|Lambda_B(s)| <= |B| - (|B|-1) alpha_s(A) for B subset of A.
CarBoundCheck check_car_bound(const Graph& g, std::span<const NodeId> b,
                              std::span<const NodeId> a, double s, std::size_t trials,
                              std::uint64_t seed);

struct ContractionOptions {
  std::size_t decay_trials = 2000;
  std::size_t alpha_trials = 2000;
  std::uint64_t seed = 0;
  std::optional<double> sigma;  ///< if set, also report the 1 - sigma/s bound
};

struct ContractionReport {
  double t = 0;
  double s = 0;
  std::size_t parts = 0;
  double n_t = 0;
  double n_t_se = 0;
  double n_ts = 0;
  double n_ts_se = 0;
  double alpha = 0;            ///< min over blocks of alpha_s(A_j)
  double rhs = 0;              ///< N(t) exp(-alpha / 2)
  double combined_se = 0;
  double slack = 0;            ///< rhs - N(t+s)
  bool holds = false;          ///< N(t+s) <= rhs
  bool holds_within_ci = false;
  std::optional<double> markov_alpha;  ///< 1 - sigma / s
  std::optional<double> markov_rhs;
  bool parts_precondition = false;     ///< m <= N(t) / 2
  bool tokens_precondition = false;    ///< N(t) >= 2
  bool time_precondition = false;      ///< s <= t
};

/// Monte Carlo check of N(t+s) <= N(t) exp(-alpha_s(partition) / 2).
ContractionReport check_contraction(const Graph& g, double t, double s,
                                    const std::vector<std::vector<NodeId>>& partition,
                                    ContractionOptions options = {});

// ---- heat kernel ----------------------------------------------------------

/// Dense powers of the lazy walk matrix lazy I + (1 - lazy) D^{-1} A.
class TransitionPowers {
 public:
  TransitionPowers(const Graph& g, double lazy_prob, std::size_t t_max);

  std::size_t size() const noexcept { return n_; }
  std::size_t t_max() const noexcept { return powers_.size() - 1; }
  /// P_t(u, v) for 0 <= t <= t_max.
  double at(std::size_t t, NodeId u, NodeId v) const { return powers_[t][u * n_ + v]; }

 private:
  std::size_t n_;
  std::vector<std::vector<double>> powers_;
};

struct GaussianPoint {
  double c4 = 0;
  double c3 = 0;  ///< largest feasible C3 for this C4
};

struct GaussianViolation {
  NodeId u = 0;
  NodeId v = 0;
  std::size_t t = 0;
  std::uint32_t distance = 0;
};

struct GaussianBoundReport {
  std::size_t t_max = 0;
  double lazy_prob = 0;
  bool feasible = false;
  double c3 = 0;
  double c4 = 0;
  std::vector<GaussianPoint> frontier;
  std::vector<GaussianViolation> violations;  ///< zero-probability (u,v,t), capped
  std::size_t checked_triples = 0;
};

inline constexpr std::size_t kGaussianNodeLimit = 2500;

/// Fits C3/t exp(-d^2 / (C4 t)) <= P_t(u,v) for all 1 <= d(u,v) <= t <= t_max.
GaussianBoundReport check_gaussian_bound(const Graph& g, std::size_t t_max,
                                         double lazy_prob = 0.5);

/// N(u, w, T0) = sum_{t=0}^{T0} sum_v P_t(u,v) P_t(w,v).
double collision_count(const TransitionPowers& powers, NodeId u, NodeId w, std::size_t t0);

/// Monte Carlo co-location count of two independent lazy walks over [0, T0].
MeanEstimate simulate_collision_count(const Graph& g, NodeId u, NodeId w, std::size_t t0,
                                      double lazy_prob, std::size_t trials, std::uint64_t seed);

// ---- combined regularity report ------------------------------------------

struct RegularityReport {
  GeometricNeighborhoodReport neighborhood;
  VolumeDoublingReport doubling;
  std::optional<IsoperimetryCertificate> isoperimetry;
  std::optional<GaussianBoundReport> gaussian;
  bool neighborhood_pass = false;
  bool gaussian_pass = false;
};

struct RegularityOptions {
  std::size_t t_max = 40;
  double lazy_prob = 0.5;
  std::size_t iso_radius = 2;
  RegularitySampling sampling;
};

RegularityReport regularity_report(const Graph& g, RegularityOptions options = {});

}  // namespace tokgossip::analysis
