#ifndef FAIRLAB_ERRORS_HPP
#define FAIRLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fairlab {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class EmptyGroup : public Error {
 public:
  using Error::Error;
};

class SingularSupport : public Error {
 public:
  using Error::Error;
};

class DegenerateMarginal : public Error {
 public:
  using Error::Error;
};

class InvalidBandwidth : public Error {
 public:
  using Error::Error;
};

class UnsupportedKind : public Error {
 public:
  using Error::Error;
};

class DivergedTraining : public Error {
 public:
  DivergedTraining(const std::string& what, int epoch)
      : Error(what), epoch(epoch) {}
  int epoch;
};

class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double residual = 0.0)
      : Error(what), residual(residual) {}
  double residual;
};

class InvalidPerturbation : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row) : Error(what), row(row) {}
  long row;
};

}  // namespace fairlab

#endif
