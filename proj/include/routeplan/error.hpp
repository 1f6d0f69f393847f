#ifndef ROUTEPLAN_ERROR_HPP_
#define ROUTEPLAN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace routeplan {

/// Base of every error the library reports for bad input or a refused
/// request. Anything else escaping the library is an internal failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ROUTEPLAN_DEFINE_ERROR(Name)   \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

ROUTEPLAN_DEFINE_ERROR(ParseError)
ROUTEPLAN_DEFINE_ERROR(ValidationError)
ROUTEPLAN_DEFINE_ERROR(EmptyNetwork)
ROUTEPLAN_DEFINE_ERROR(UnknownVertex)
ROUTEPLAN_DEFINE_ERROR(NoRoute)
ROUTEPLAN_DEFINE_ERROR(MixedSegments)
ROUTEPLAN_DEFINE_ERROR(InvalidPath)
ROUTEPLAN_DEFINE_ERROR(PathNotInNetwork)
ROUTEPLAN_DEFINE_ERROR(RasterUnsupported)
ROUTEPLAN_DEFINE_ERROR(DuplicateUsername)
ROUTEPLAN_DEFINE_ERROR(WeakPassword)
ROUTEPLAN_DEFINE_ERROR(Unauthorized)
ROUTEPLAN_DEFINE_ERROR(SessionExpired)
ROUTEPLAN_DEFINE_ERROR(NotFound)
ROUTEPLAN_DEFINE_ERROR(UnknownChannel)

#undef ROUTEPLAN_DEFINE_ERROR

/// Refused by role policy. `code` is a stable machine-readable reason.
class Forbidden : public Error {
 public:
  explicit Forbidden(std::string code, const std::string& what)
      : Error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace routeplan

#endif  // ROUTEPLAN_ERROR_HPP_
