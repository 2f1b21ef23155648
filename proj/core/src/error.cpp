#include "tokgossip/error.hpp"

namespace tokgossip {

void require(bool condition, const std::string& what) {
  if (!condition) throw UsageError(what);
}

}  // namespace tokgossip
