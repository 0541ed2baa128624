#pragma once

#include <iosfwd>
#include <string>

#include "pwlv/mip.hpp"

namespace pwlv {

// Free-format MPS with deterministic row/column names; shortest round-trip
// number formatting keeps the output byte-stable and exactly re-parsable.
void write_mps(const MipModel& model, std::ostream& out, const std::string& name = "pwlv");

// Human-readable LP format.
void write_lp(const MipModel& model, std::ostream& out);

// shortest round-trip decimal representation of a double
std::string format_number(double v);

}  // namespace pwlv
