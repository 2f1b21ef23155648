#pragma once

#include <iosfwd>

namespace tokgossip::cli {

/// Exit codes: 0 success, 1 a scaling check failed, 2 usage, 3 generation,
/// 4 simulation, 5 analysis.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tokgossip::cli
