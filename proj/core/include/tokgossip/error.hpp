#pragma once

#include <stdexcept>
#include <string>

namespace tokgossip {

/// Failure categories. Each maps onto a stable CLI exit code.
enum class ErrorCategory {
  Usage = 2,       ///< invalid parameters or malformed input
  Generation = 3,  ///< a generator could not produce a valid graph
  Simulation = 4,  ///< a protocol run violated its contract or ran out of time
  Analysis = 5,    ///< a solver failed or an analysis precondition was violated
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};
struct GenerationError : Error {
  explicit GenerationError(const std::string& what)
      : Error(ErrorCategory::Generation, what) {}
};
struct SimulationError : Error {
  explicit SimulationError(const std::string& what)
      : Error(ErrorCategory::Simulation, what) {}
};
struct AnalysisError : Error {
  explicit AnalysisError(const std::string& what) : Error(ErrorCategory::Analysis, what) {}
};

/// Throws UsageError with `what` unless `condition` holds.
void require(bool condition, const std::string& what);

}  // namespace tokgossip
