#pragma once
// Error taxonomy shared by the library and the CLI. The CLI maps each
// category to its own process exit code so that scripts can tell bad input
// apart from statistical degeneracy and from structurally impossible
// requests.

#include <stdexcept>
#include <string>

namespace factex {

// malformed data, unparseable files, out-of-domain arguments (CLI exit 2)
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// the data carry no usable variation: zero standard error, undefined
// sample variance, a proportion at 0 or 1 where a log is needed (CLI exit 3)
class DegeneracyError : public std::runtime_error {
 public:
  explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

// the request cannot be satisfied as posed: balanced allocation when J does
// not divide N, population targets that no 0/1 table can match, enumeration
// beyond the configured cap (CLI exit 4)
class InfeasibilityError : public std::runtime_error {
 public:
  explicit InfeasibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace factex
