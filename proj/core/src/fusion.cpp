#include "tokgossip/fusion.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tokgossip {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("malformed integer value '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError("malformed real value '" + std::string(s) + "'");
  }
  return v;
}

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::string_view to_string(FusionKind k) {
  switch (k) {
    case FusionKind::Sum:
      return "sum";
    case FusionKind::Max:
      return "max";
    case FusionKind::WeightedAvg:
      return "wavg";
  }
  return "sum";
}

FusionKind parse_fusion_kind(std::string_view name) {
  if (name == "sum") return FusionKind::Sum;
  if (name == "max") return FusionKind::Max;
  if (name == "wavg" || name == "weighted_avg" || name == "avg") return FusionKind::WeightedAvg;
  throw UsageError("unknown fusion kind '" + std::string(name) + "'");
}

FusionKind kind_of(const FusionValue& v) noexcept {
  return static_cast<FusionKind>(v.index());
}

std::string to_string(const FusionValue& v) {
  switch (kind_of(v)) {
    case FusionKind::Sum:
      return std::to_string(std::get<SumValue>(v).value);
    case FusionKind::Max: {
      const auto& m = std::get<MaxValue>(v);
      return m.value ? std::to_string(*m.value) : std::string("-inf");
    }
    case FusionKind::WeightedAvg: {
      const auto& a = std::get<AvgValue>(v);
      return shortest(a.estimate) + " " + shortest(a.weight);
    }
  }
  return {};
}

bool approx_equal(const FusionValue& a, const FusionValue& b, double rel_tol) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<AvgValue>(&a)) {
    const auto& y = std::get<AvgValue>(b);
    if (x->weight == 0.0 || y.weight == 0.0) return x->weight == y.weight;
    return rel_close(x->estimate, y.estimate, rel_tol) && rel_close(x->weight, y.weight, rel_tol);
  }
  return a == b;
}

FusionValue FusionSpec::identity() const {
  switch (kind_) {
    case FusionKind::Sum:
      return SumValue{0};
    case FusionKind::Max:
      return MaxValue{};
    case FusionKind::WeightedAvg:
      return AvgValue{0.0, 0.0};
  }
  return SumValue{0};
}

bool FusionSpec::is_identity(const FusionValue& v) const {
  if (kind_of(v) != kind_) return false;
  switch (kind_) {
    case FusionKind::Sum:
      return std::get<SumValue>(v).value == 0;
    case FusionKind::Max:
      return !std::get<MaxValue>(v).value.has_value();
    case FusionKind::WeightedAvg:
      return std::get<AvgValue>(v).weight == 0.0;
  }
  return false;
}

FusionValue FusionSpec::fuse(const FusionValue& a, const FusionValue& b) const {
  if (kind_of(a) != kind_ || kind_of(b) != kind_) {
    throw UsageError("fuse: value kind does not match fusion kind " + std::string(to_string(kind_)));
  }
  switch (kind_) {
    case FusionKind::Sum: {
      std::int64_t out = 0;
      if (__builtin_add_overflow(std::get<SumValue>(a).value, std::get<SumValue>(b).value, &out)) {
        throw SimulationError("fuse: 64-bit sum overflow");
      }
      return SumValue{out};
    }
    case FusionKind::Max: {
      const auto& x = std::get<MaxValue>(a).value;
      const auto& y = std::get<MaxValue>(b).value;
      if (!x) return MaxValue{y};
      if (!y) return MaxValue{x};
      return MaxValue{std::max(*x, *y)};
    }
    case FusionKind::WeightedAvg: {
      const auto& x = std::get<AvgValue>(a);
      const auto& y = std::get<AvgValue>(b);
      if (x.weight == 0.0) return y;
      if (y.weight == 0.0) return x;
      const double w = x.weight + y.weight;
      return AvgValue{(x.weight * x.estimate + y.weight * y.estimate) / w, w};
    }
  }
  return a;
}

FusionValue FusionSpec::fold(std::span<const FusionValue> values) const {
  if (values.empty()) throw UsageError("fold: empty input");
  FusionValue acc = values.front();
  if (kind_of(acc) != kind_) throw UsageError("fold: value kind does not match fusion kind");
  for (std::size_t i = 1; i < values.size(); ++i) acc = fuse(acc, values[i]);
  return acc;
}

FusionValue FusionSpec::parse_value(std::string_view text) const {
  text = trim(text);
  switch (kind_) {
    case FusionKind::Sum:
      return SumValue{parse_int(text)};
    case FusionKind::Max:
      if (text == "-inf") return MaxValue{};
      return MaxValue{parse_int(text)};
    case FusionKind::WeightedAvg: {
      const auto sp = text.find_first_of(" \t");
      if (sp == std::string_view::npos) return AvgValue{parse_real(text), 1.0};
      const double y = parse_real(text.substr(0, sp));
      const double w = parse_real(trim(text.substr(sp)));
      if (w < 0.0) throw UsageError("weighted average weight must be nonnegative");
      return AvgValue{y, w};
    }
  }
  return SumValue{0};
}

FusionValue FusionSpec::from_integer(std::int64_t x) const {
  switch (kind_) {
    case FusionKind::Sum:
      return SumValue{x};
    case FusionKind::Max:
      return MaxValue{x};
    case FusionKind::WeightedAvg:
      return AvgValue{static_cast<double>(x), 1.0};
  }
  return SumValue{x};
}

TokenPayload fuse_payload(const FusionSpec& spec, const TokenPayload& p, const TokenPayload& q) {
  std::uint64_t count = 0;
  if (__builtin_add_overflow(p.count, q.count, &count)) {
    throw SimulationError("fuse_payload: count overflow");
  }
  return {spec.fuse(p.value, q.value), count};
}

std::vector<FusionValue> read_values(std::istream& in, const FusionSpec& spec) {
  std::vector<FusionValue> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) throw UsageError("values file: empty line " + std::to_string(out.size() + 1));
    out.push_back(spec.parse_value(t));
  }
  return out;
}

std::vector<FusionValue> load_values(const std::string& path, const FusionSpec& spec) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open values file '" + path + "'");
  return read_values(in, spec);
}

void write_values(std::ostream& out, std::span<const FusionValue> values) {
  for (const auto& v : values) out << to_string(v) << '\n';
}

}  // namespace tokgossip
