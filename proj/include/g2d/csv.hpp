#pragma once

#include <string>

namespace g2d {

/// Shortest decimal form that parses back to the same double (via
/// std::to_chars). Keeps CSV output byte-stable and round-trip exact.
std::string csv_double(double v);

}  // namespace g2d
