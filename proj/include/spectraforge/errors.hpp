#pragma once

#include <stdexcept>
#include <string>

namespace spectraforge {

// Base error carrying a stable machine-parsable class name. The CLI prints
// one line "<error_class>: <message>" on stderr and exits 1.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& message)
      : std::runtime_error(message), class_(std::move(error_class)) {}

  const std::string& error_class() const noexcept { return class_; }

 private:
  std::string class_;
};

#define SPECTRAFORGE_ERROR_CLASS(NAME)                                     \
  class NAME : public Error {                                              \
   public:                                                                 \
    explicit NAME(const std::string& message) : Error(#NAME, message) {}   \
  }

SPECTRAFORGE_ERROR_CLASS(FormatError);           // malformed file headers / parse failures
SPECTRAFORGE_ERROR_CLASS(DataError);             // non-finite or out-of-domain values
SPECTRAFORGE_ERROR_CLASS(IoError);               // filesystem failures
SPECTRAFORGE_ERROR_CLASS(SpecError);             // violated operation precondition
SPECTRAFORGE_ERROR_CLASS(ShapeError);            // dimension mismatches
SPECTRAFORGE_ERROR_CLASS(StratifyError);         // stratified split impossible
SPECTRAFORGE_ERROR_CLASS(HoldoutError);          // per-class holdout impossible
SPECTRAFORGE_ERROR_CLASS(DegenerateScaleError);  // constant training intensities
SPECTRAFORGE_ERROR_CLASS(DegenerateError);       // zero-variance input to a fit
SPECTRAFORGE_ERROR_CLASS(NumericsError);         // factorization / finiteness failures
SPECTRAFORGE_ERROR_CLASS(DivergedError);         // training loss became non-finite
SPECTRAFORGE_ERROR_CLASS(StatsError);            // too few samples for statistics

#undef SPECTRAFORGE_ERROR_CLASS

}  // namespace spectraforge
