#pragma once

#include <stdexcept>
#include <string>

namespace aoisched {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AOISCHED_DEFINE_ERROR(Name)      \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

AOISCHED_DEFINE_ERROR(DimensionError);    // shapes or non-finite entries
AOISCHED_DEFINE_ERROR(DomainError);       // argument outside its domain (e.g. delta == 0)
AOISCHED_DEFINE_ERROR(ConvergenceError);  // iterative solver ran out of iterations
AOISCHED_DEFINE_ERROR(AssumptionError);   // rho(A) <= 1 or another model assumption
AOISCHED_DEFINE_ERROR(StabilityError);    // alpha * (1 - p) >= 1
AOISCHED_DEFINE_ERROR(OracleError);       // numeric oracle could not bracket a root
AOISCHED_DEFINE_ERROR(ResourceError);     // state space over budget
AOISCHED_DEFINE_ERROR(GenerationError);   // random plant rejection sampling exhausted
AOISCHED_DEFINE_ERROR(NoBoundError);      // upper-bound existence condition fails
AOISCHED_DEFINE_ERROR(UnsupportedError);  // e.g. defective A for the origin lower bound
AOISCHED_DEFINE_ERROR(ConfigError);       // malformed config / CLI input
AOISCHED_DEFINE_ERROR(IoError);

#undef AOISCHED_DEFINE_ERROR

}  // namespace aoisched
