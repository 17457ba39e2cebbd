#pragma once

#include <stdexcept>
#include <string>

namespace spade {

// Every library failure derives from one of two roots. ValidationError covers
// rejected inputs (bad arguments, malformed files, unphysical configurations);
// the CLI maps it to exit code 2. NumericalError covers computations that
// cannot proceed reliably (support loss, step-size failure, truncation,
// degeneracy); the CLI maps it to exit code 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

#define SPADE_DEFINE_ERROR(Name, Base)               \
  class Name : public Base {                         \
   public:                                           \
    explicit Name(const std::string& what)           \
        : Base(std::string(#Name) + ": " + what) {}  \
  }

SPADE_DEFINE_ERROR(InvalidArgument, ValidationError);
SPADE_DEFINE_ERROR(OutOfRange, ValidationError);
SPADE_DEFINE_ERROR(FileFormatError, ValidationError);
SPADE_DEFINE_ERROR(PsfValidationError, ValidationError);
SPADE_DEFINE_ERROR(PovmValidationError, ValidationError);
SPADE_DEFINE_ERROR(AngleOutOfRange, ValidationError);
SPADE_DEFINE_ERROR(Unsupported, ValidationError);

SPADE_DEFINE_ERROR(DegeneratePsf, NumericalError);
SPADE_DEFINE_ERROR(SupportOverflow, NumericalError);
SPADE_DEFINE_ERROR(DegenerateBasis, NumericalError);
SPADE_DEFINE_ERROR(DegenerateB1, NumericalError);
SPADE_DEFINE_ERROR(NegativeProbability, NumericalError);
SPADE_DEFINE_ERROR(StepTooLarge, NumericalError);
SPADE_DEFINE_ERROR(TruncationTooSmall, NumericalError);
SPADE_DEFINE_ERROR(ZeroQfi, NumericalError);
SPADE_DEFINE_ERROR(NonIdentifiable, NumericalError);

#undef SPADE_DEFINE_ERROR

}  // namespace spade
