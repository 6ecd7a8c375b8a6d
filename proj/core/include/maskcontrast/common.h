#pragma once

#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

// Storage precision is chosen at build time. The 64-bit flavour is used for
// gradient verification; its symbols live in a distinct inline namespace so
// both flavours can coexist in one binary.
#if defined(MASKCONTRAST_REAL64)
#define MASKCONTRAST_PRECISION_NS f64
#else
#define MASKCONTRAST_PRECISION_NS f32
#endif

#define MC_NAMESPACE_BEGIN \
  namespace mc {           \
  inline namespace MASKCONTRAST_PRECISION_NS {
#define MC_NAMESPACE_END \
  }                      \
  }

namespace mc {

inline namespace MASKCONTRAST_PRECISION_NS {
#if defined(MASKCONTRAST_REAL64)
using Real = double;
#else
using Real = float;
#endif
}  // namespace MASKCONTRAST_PRECISION_NS

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad input data or usage: malformed files, missing files, invalid options.
/// The command-line tool maps these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during optimisation (non-finite gradients, degenerate
/// embeddings).
class NumericError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline bool& log_quiet_flag() {
  static bool quiet = false;
  return quiet;
}
}  // namespace detail

inline void set_log_quiet(bool quiet) { detail::log_quiet_flag() = quiet; }

/// Writes a warning line to stderr unless quiet mode is on.
inline void log_warning(std::string_view message) {
  if (!detail::log_quiet_flag()) std::cerr << "warning: " << message << '\n';
}

inline void log_info(std::string_view message) {
  if (!detail::log_quiet_flag()) std::cerr << message << '\n';
}

}  // namespace mc
