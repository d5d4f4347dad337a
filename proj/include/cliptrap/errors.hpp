#ifndef CLIPTRAP_ERRORS_HPP
#define CLIPTRAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cliptrap {

// Bad input: invalid parameter, missing key, malformed file. Maps to CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to reach its tolerance. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace detail
}  // namespace cliptrap

#endif
