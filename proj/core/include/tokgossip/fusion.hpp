#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tokgossip/error.hpp"

namespace tokgossip {

enum class FusionKind { Sum, Max, WeightedAvg };

std::string_view to_string(FusionKind k);
FusionKind parse_fusion_kind(std::string_view name);

struct SumValue {
  std::int64_t value = 0;
  bool operator==(const SumValue&) const = default;
};

/// An empty optional is the -infinity identity, distinct from every integer.
struct MaxValue {
  std::optional<std::int64_t> value;
  bool operator==(const MaxValue&) const = default;
};

/// (estimate, weight). Weight 0 is the identity regardless of the estimate.
struct AvgValue {
  double estimate = 0.0;
  double weight = 0.0;
  bool operator==(const AvgValue&) const = default;
};

using FusionValue = std::variant<SumValue, MaxValue, AvgValue>;

FusionKind kind_of(const FusionValue& v) noexcept;
std::string to_string(const FusionValue& v);

/// Relative-tolerance comparison for WeightedAvg; exact for Sum and Max.
bool approx_equal(const FusionValue& a, const FusionValue& b, double rel_tol = 1e-9);

/// A symmetric decomposable aggregate: its atomic binary step and identity.
///
/// fuse(x, e) = fuse(e, x) = x for every x; in particular fuse(e, e) = e.
class FusionSpec {
 public:
  explicit FusionSpec(FusionKind kind) : kind_(kind) {}

  FusionKind kind() const noexcept { return kind_; }
  FusionValue identity() const;
  bool is_identity(const FusionValue& v) const;

  /// Throws UsageError on kind mismatch and SimulationError on Sum overflow.
  FusionValue fuse(const FusionValue& a, const FusionValue& b) const;

  /// Left fold over a nonempty sequence.
  FusionValue fold(std::span<const FusionValue> values) const;

  /// Parses one value line: an integer for Sum/Max, `y [w]` for WeightedAvg
  /// (weight defaults to 1).
  FusionValue parse_value(std::string_view text) const;

  /// Lift an integer sensor reading into this kind (weight 1 for averages).
  FusionValue from_integer(std::int64_t x) const;

  bool operator==(const FusionSpec&) const = default;

 private:
  FusionKind kind_;
};

/// The (value, count) pair carried by a token.
struct TokenPayload {
  FusionValue value;
  std::uint64_t count = 0;
  bool operator==(const TokenPayload&) const = default;
};

TokenPayload fuse_payload(const FusionSpec& spec, const TokenPayload& p, const TokenPayload& q);

/// One value per line; the line index is the node id.
std::vector<FusionValue> read_values(std::istream& in, const FusionSpec& spec);
std::vector<FusionValue> load_values(const std::string& path, const FusionSpec& spec);
void write_values(std::ostream& out, std::span<const FusionValue> values);

}  // namespace tokgossip
