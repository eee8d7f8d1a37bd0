#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace g2d {

/// Base error for all failures raised by the library.
class G2dError : public std::runtime_error {
 public:
  explicit G2dError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a run configuration is structurally invalid. Carries every
/// offending field so a single pass reports all problems at once.
class ConfigError : public G2dError {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : G2dError(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "invalid config:";
    for (const auto& p : problems) {
      out += "\n  - " + p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace g2d
