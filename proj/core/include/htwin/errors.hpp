#pragma once

#include <stdexcept>
#include <string>

namespace htwin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HTWIN_DECLARE_ERROR(Name)             \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

HTWIN_DECLARE_ERROR(ParameterError);   // invalid numeric argument
HTWIN_DECLARE_ERROR(GeometryError);    // degenerate or invalid geometry
HTWIN_DECLARE_ERROR(ConfigError);      // ill-posed configuration
HTWIN_DECLARE_ERROR(NumericError);     // value outside a function's domain, NaN/Inf
HTWIN_DECLARE_ERROR(SolverError);      // linear or nonlinear solver failure
HTWIN_DECLARE_ERROR(DataError);        // inconsistent data (lengths, labels, pairing)
HTWIN_DECLARE_ERROR(ShapeError);       // tensor shape mismatch
HTWIN_DECLARE_ERROR(UsageError);       // API misuse
HTWIN_DECLARE_ERROR(IntegrityError);   // hash mismatch on load
HTWIN_DECLARE_ERROR(IoError);          // filesystem failure or missing artifact

#undef HTWIN_DECLARE_ERROR

}  // namespace htwin
