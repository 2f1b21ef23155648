#include <algorithm>
#include <cmath>
#include <numeric>

#include "linalg.hpp"
#include "tokgossip/analysis.hpp"

namespace tokgossip::analysis {

namespace {

std::vector<NodeId> distinct_nodes(const Graph& g, std::span<const NodeId> nodes,
                                   const std::string& what) {
  std::vector<NodeId> out(nodes.begin(), nodes.end());
  for (NodeId v : out) detail::require_node(g, v, what);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Area under the count path on [0, until), advanced incrementally.
class AreaCursor {
 public:
  explicit AreaCursor(const CountPath& p) : p_(p) {}

  double advance_to(double until) {
    while (idx_ + 1 < p_.t.size() && p_.t[idx_ + 1] <= until) {
      area_ += p_.count[idx_] * (p_.t[idx_ + 1] - at_);
      at_ = p_.t[idx_ + 1];
      ++idx_;
    }
    area_ += p_.count[idx_] * (until - at_);
    at_ = until;
    return area_;
  }

 private:
  const CountPath& p_;
  std::size_t idx_ = 0;
  double at_ = 0.0;
  double area_ = 0.0;
};

struct Moments {
  std::vector<double> sum, sum_sq;
  explicit Moments(std::size_t k) : sum(k, 0.0), sum_sq(k, 0.0) {}
  void add(std::size_t i, double x) {
    sum[i] += x;
    sum_sq[i] += x * x;
  }
  void finish(std::size_t trials, std::vector<double>& mean, std::vector<double>& se) const {
    const double n = static_cast<double>(trials);
    mean.resize(sum.size());
    se.resize(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) {
      mean[i] = sum[i] / n;
      const double var = trials > 1 ? std::max(0.0, (sum_sq[i] - n * mean[i] * mean[i]) / (n - 1)) : 0.0;
      se[i] = std::sqrt(var / n);
    }
  }
};

}  // namespace

std::uint32_t CountPath::at(double time) const {
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  if (it == t.begin()) return count.front();
  return count[static_cast<std::size_t>(it - t.begin()) - 1];
}

CountPath simulate_coalescing(const Graph& g, const ClockMode& mode, double horizon,
                              RngStream& rng) {
  validate(mode);
  const std::size_t n = g.size();
  CountPath path;
  path.t.push_back(0.0);
  path.count.push_back(static_cast<std::uint32_t>(n));
  std::vector<NodeId> pos(n);
  std::iota(pos.begin(), pos.end(), NodeId{0});
  std::size_t k = n;

  if (is_continuous(mode)) {
    std::vector<std::int64_t> occupant(n);
    std::iota(occupant.begin(), occupant.end(), std::int64_t{0});
    double t = 0.0;
    while (k > 1) {
      t += rng.exponential(static_cast<double>(k));
      if (t > horizon) break;
      const auto i = static_cast<std::size_t>(rng.uniform_index(k));
      const NodeId from = pos[i];
      const NodeId to = pick_uniform(g.neighbors(from), rng);
      occupant[from] = -1;
      if (occupant[to] >= 0) {
        pos[i] = pos[k - 1];
        if (i != k - 1) occupant[pos[i]] = static_cast<std::int64_t>(i);
        --k;
        path.t.push_back(t);
        path.count.push_back(static_cast<std::uint32_t>(k));
      } else {
        pos[i] = to;
        occupant[to] = static_cast<std::int64_t>(i);
      }
    }
  } else {
    const double lazy = lazy_prob(mode);
    std::vector<std::uint64_t> stamp(n, 0);
    std::uint64_t round = 0;
    while (k > 1 && static_cast<double>(round + 1) <= horizon) {
      ++round;
      std::size_t kept = 0;
      for (std::size_t i = 0; i < k; ++i) {
        NodeId p = pos[i];
        if (!(lazy > 0.0 && rng.bernoulli(lazy))) p = pick_uniform(g.neighbors(p), rng);
        pos[i] = p;
      }
      // Tokens sharing a node after the round coalesce into one.
      for (std::size_t i = 0; i < k; ++i) {
        if (stamp[pos[i]] != round) {
          stamp[pos[i]] = round;
          pos[kept++] = pos[i];
        }
      }
      if (kept != k) {
        k = kept;
        path.t.push_back(static_cast<double>(round));
        path.count.push_back(static_cast<std::uint32_t>(k));
      }
    }
  }
  path.absorbed = k == 1;
  return path;
}

std::vector<double> geometric_grid(double t_min, double t_max, std::size_t per_decade) {
  if (!(t_min > 0.0) || per_decade == 0) throw UsageError("geometric_grid: bad parameters");
  std::vector<double> grid{0.0};
  for (std::size_t k = 0;; ++k) {
    const double t = t_min * std::pow(10.0, static_cast<double>(k) / static_cast<double>(per_decade));
    grid.push_back(t);
    if (t >= t_max) break;
  }
  return grid;
}

GammaTime DecayCurve::t_gamma(double gamma) const {
  GammaTime out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (n_hat[i] <= gamma) {
      out.reached = true;
      out.t = grid[i];
      out.bracket_high = grid[i];
      out.bracket_low = i == 0 ? grid[0] : grid[i - 1];
      return out;
    }
  }
  if (!grid.empty()) out.t = out.bracket_low = out.bracket_high = grid.back();
  return out;
}

std::size_t DecayCurve::index_at_or_before(double t) const {
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  return it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
}

DecayCurve estimate_decay(const Graph& g, std::size_t trials, const DecayOptions& options,
                          std::uint64_t seed) {
  detail::require_connected(g, "estimate_decay");
  validate(options.mode);
  if (trials == 0) throw UsageError("estimate_decay: trials must be positive");
  const bool continuous = is_continuous(options.mode);

  std::vector<CountPath> paths;
  paths.reserve(trials);
  std::vector<double> absorption;
  double t_end = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream rng(seed, trial);
    paths.push_back(simulate_coalescing(g, options.mode, options.horizon, rng));
    const auto& p = paths.back();
    t_end = std::max(t_end, p.t.back());
    if (p.absorbed) absorption.push_back(p.t.back());
  }

  DecayCurve c;
  c.n = g.size();
  c.trials = trials;
  c.continuous = continuous;
  if (!options.grid.empty()) {
    c.grid = options.grid;
    std::sort(c.grid.begin(), c.grid.end());
    if (c.grid.front() < 0.0) throw UsageError("estimate_decay: negative grid time");
  } else {
    c.grid = geometric_grid(options.t_min, std::max(t_end, options.t_min), options.points_per_decade);
    if (!continuous) {
      for (auto& t : c.grid) t = std::round(t);
      c.grid.erase(std::unique(c.grid.begin(), c.grid.end()), c.grid.end());
    }
  }

  Moments count(c.grid.size()), area(c.grid.size());
  for (const auto& p : paths) {
    AreaCursor cursor(p);
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      const double t = c.grid[i];
      count.add(i, p.at(t));
      // Discrete mode sums N over rounds 0..t, i.e. the step area on [0, t+1).
      area.add(i, cursor.advance_to(continuous ? t : std::floor(t) + 1.0));
    }
  }
  count.finish(trials, c.n_hat, c.n_stderr);
  area.finish(trials, c.m_hat, c.m_stderr);
  c.absorbed_trials = absorption.size();
  c.mean_absorption = stats::mean(absorption);
  c.absorption_stderr = stats::standard_error(absorption);
  return c;
}

// ---- graphical construction ----------------------------------------------

GraphicalConstruction::GraphicalConstruction(const Graph& g, double horizon, RngStream& rng)
    : n_(g.size()), horizon_(horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw UsageError("GraphicalConstruction: horizon must be finite and nonnegative");
  }
  double t = 0.0;
  for (;;) {
    t += rng.exponential(static_cast<double>(n_));
    if (t > horizon) break;
    const auto from = static_cast<NodeId>(rng.uniform_index(n_));
    arrows_.push_back({t, from, pick_uniform(g.neighbors(from), rng)});
  }
}

std::vector<std::size_t> GraphicalConstruction::surviving(std::span<const NodeId> start,
                                                          std::span<const double> times) const {
  std::vector<char> occupied(n_, 0);
  std::size_t alive = 0;
  for (NodeId v : start) {
    if (v >= n_) throw UsageError("GraphicalConstruction: node out of range");
    if (!occupied[v]) {
      occupied[v] = 1;
      ++alive;
    }
  }
  std::vector<std::size_t> out;
  out.reserve(times.size());
  std::size_t next = 0;
  double last = 0.0;
  for (double s : times) {
    if (s < last) throw UsageError("GraphicalConstruction: times must be nondecreasing");
    if (s > horizon_) throw UsageError("GraphicalConstruction: time beyond horizon");
    last = s;
    for (; next < arrows_.size() && arrows_[next].t <= s; ++next) {
      const Arrow& a = arrows_[next];
      if (!occupied[a.from]) continue;
      occupied[a.from] = 0;
      if (occupied[a.to]) {
        --alive;
      } else {
        occupied[a.to] = 1;
      }
    }
    out.push_back(alive);
  }
  return out;
}

std::size_t GraphicalConstruction::surviving(std::span<const NodeId> start, double s) const {
  const double one[] = {s};
  return surviving(start, one).front();
}

std::vector<CoalescingEstimate> coalescing_curve(const Graph& g, std::span<const NodeId> start,
                                                 std::span<const double> s_values,
                                                 std::size_t trials, std::uint64_t seed) {
  const auto b = distinct_nodes(g, start, "coalescing_oracle");
  if (b.empty()) throw UsageError("coalescing_oracle: start set is empty");
  if (trials == 0) throw UsageError("coalescing_oracle: trials must be positive");
  std::vector<std::size_t> order(s_values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return s_values[i] < s_values[j]; });
  std::vector<double> sorted;
  for (auto i : order) {
    if (!(s_values[i] >= 0.0)) throw UsageError("coalescing_oracle: s must be nonnegative");
    sorted.push_back(s_values[i]);
  }
  const double horizon = sorted.empty() ? 0.0 : sorted.back();

  Moments m(sorted.size());
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream rng(seed, trial);
    GraphicalConstruction gc(g, horizon, rng);
    const auto alive = gc.surviving(b, sorted);
    for (std::size_t i = 0; i < alive.size(); ++i) m.add(i, static_cast<double>(alive[i]));
  }
  std::vector<double> mean, se;
  m.finish(trials, mean, se);
  std::vector<CoalescingEstimate> out(s_values.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out[order[k]] = {sorted[k], mean[k], se[k], trials};
  }
  return out;
}

CoalescingEstimate coalescing_oracle(const Graph& g, std::span<const NodeId> start, double s,
                                     std::size_t trials, std::uint64_t seed) {
  const double one[] = {s};
  return coalescing_curve(g, start, one, trials, seed).front();
}

PartitionLemmaResult check_partition_lemma(const Graph& g, std::span<const NodeId> start,
                                           const std::vector<std::vector<NodeId>>& partition,
                                           double s, std::size_t trials, std::uint64_t seed) {
  const auto b = distinct_nodes(g, start, "check_partition_lemma");
  std::vector<int> block(g.size(), -1);
  for (std::size_t j = 0; j < partition.size(); ++j) {
    for (NodeId v : partition[j]) {
      detail::require_node(g, v, "check_partition_lemma");
      if (block[v] >= 0) throw UsageError("check_partition_lemma: blocks overlap");
      block[v] = static_cast<int>(j);
    }
  }
  std::vector<std::vector<NodeId>> parts(partition.size());
  for (NodeId v : b) {
    if (block[v] < 0) throw UsageError("check_partition_lemma: start node outside the partition");
    parts[static_cast<std::size_t>(block[v])].push_back(v);
  }
  PartitionLemmaResult r;
  r.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream rng(seed, trial);
    GraphicalConstruction gc(g, s, rng);
    const std::size_t whole = gc.surviving(b, s);
    std::size_t sum = 0;
    for (const auto& p : parts) sum += gc.surviving(p, s);
    if (whole > sum) ++r.violations;
    r.mean_whole += static_cast<double>(whole);
    r.mean_parts += static_cast<double>(sum);
  }
  if (trials > 0) {
    r.mean_whole /= static_cast<double>(trials);
    r.mean_parts /= static_cast<double>(trials);
  }
  return r;
}

CarBoundCheck check_car_bound(const Graph& g, std::span<const NodeId> b,
                              std::span<const NodeId> a, double s, std::size_t trials,
                              std::uint64_t seed) {
  const auto bset = distinct_nodes(g, b, "check_car_bound");
  const auto aset = distinct_nodes(g, a, "check_car_bound");
  if (!std::includes(aset.begin(), aset.end(), bset.begin(), bset.end())) {
    throw UsageError("check_car_bound: B must be a subset of A");
  }
  CarBoundCheck r;
  r.s = s;
  r.lhs = coalescing_oracle(g, bset, s, trials, seed);
  r.alpha = estimate_alpha(g, aset, s, {trials, 10000, derive_stream_seed(seed, 0xa1fa)});
  const double size = static_cast<double>(bset.size());
  r.rhs = size - (size - 1.0) * r.alpha.alpha;
  const double alpha_se = r.alpha.half_width / 1.96;
  r.combined_se = std::hypot(r.lhs.standard_error, (size - 1.0) * alpha_se);
  r.holds = r.lhs.mean <= r.rhs + 3.0 * r.combined_se;
  return r;
}

ContractionReport check_contraction(const Graph& g, double t, double s,
                                    const std::vector<std::vector<NodeId>>& partition,
                                    ContractionOptions options) {
  if (!(t >= 0.0) || !(s >= 0.0)) throw UsageError("check_contraction: t and s must be nonnegative");
  std::vector<int> covered(g.size(), 0);
  for (const auto& block : partition) {
    for (NodeId v : block) {
      detail::require_node(g, v, "check_contraction");
      ++covered[v];
    }
  }
  if (std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; })) {
    throw UsageError("check_contraction: partition must cover every node exactly once");
  }

  ContractionReport r;
  r.t = t;
  r.s = s;
  r.parts = partition.size();

  DecayOptions d;
  d.grid = {t, t + s};
  d.horizon = t + s;
  const auto curve = estimate_decay(g, options.decay_trials, d, options.seed);
  r.n_t = curve.n_hat[0];
  r.n_t_se = curve.n_stderr[0];
  r.n_ts = curve.n_hat[1];
  r.n_ts_se = curve.n_stderr[1];

  // Singleton blocks hold at most one token and cannot coalesce internally;
  // they impose no constraint on the minimum.
  double alpha = 1.0, alpha_se = 0.0;
  bool any_block = false;
  for (std::size_t j = 0; j < partition.size(); ++j) {
    if (partition[j].size() < 2) continue;
    const auto e = estimate_alpha(g, partition[j], s,
                                  {options.alpha_trials, 10000, derive_stream_seed(options.seed, j + 1)});
    if (!any_block || e.alpha < alpha) {
      alpha = e.alpha;
      alpha_se = e.half_width / 1.96;
    }
    any_block = true;
  }
  if (!any_block) alpha = 0.0;
  r.alpha = alpha;
  r.rhs = r.n_t * std::exp(-alpha / 2.0);
  const double rel_nt = r.n_t > 0 ? r.n_t_se / r.n_t : 0.0;
  r.combined_se = std::sqrt(r.n_ts_se * r.n_ts_se + std::pow(r.rhs * rel_nt, 2) +
                            std::pow(r.rhs * alpha_se / 2.0, 2));
  r.slack = r.rhs - r.n_ts;
  r.holds = r.n_ts <= r.rhs;
  r.holds_within_ci = r.n_ts <= r.rhs + 3.0 * r.combined_se;
  if (options.sigma && s > 0.0) {
    r.markov_alpha = std::max(0.0, 1.0 - *options.sigma / s);
    r.markov_rhs = r.n_t * std::exp(-*r.markov_alpha / 2.0);
  }
  r.parts_precondition = static_cast<double>(partition.size()) <= r.n_t / 2.0;
  r.tokens_precondition = r.n_t >= 2.0;
  r.time_precondition = s <= t;
  return r;
}

}  // namespace tokgossip::analysis
