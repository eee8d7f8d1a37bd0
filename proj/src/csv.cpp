#include "g2d/csv.hpp"

#include <charconv>

namespace g2d {

std::string csv_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace g2d
