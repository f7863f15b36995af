#pragma once

#include <stdexcept>
#include <string>

namespace evtrust {

// Base for every error raised by the library. Subclasses only tag the
// failure category; the message carries the context.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EVTRUST_DEFINE_ERROR(name)        \
  class name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

EVTRUST_DEFINE_ERROR(ConfigError)       // inconsistent shapes or settings
EVTRUST_DEFINE_ERROR(InputError)        // malformed data handed to an operation
EVTRUST_DEFINE_ERROR(DomainError)       // argument outside a function's domain
EVTRUST_DEFINE_ERROR(GenerationError)   // randomized construction ran out of retries
EVTRUST_DEFINE_ERROR(PartitionError)
EVTRUST_DEFINE_ERROR(SplitError)
EVTRUST_DEFINE_ERROR(ParseError)        // unreadable config or CSV text
EVTRUST_DEFINE_ERROR(ValidationError)   // well-formed config violating a constraint
EVTRUST_DEFINE_ERROR(EvaluationError)
EVTRUST_DEFINE_ERROR(AggregationError)
EVTRUST_DEFINE_ERROR(IoError)

#undef EVTRUST_DEFINE_ERROR

}  // namespace evtrust
