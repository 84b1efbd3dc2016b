#pragma once

#include <stdexcept>
#include <string>

namespace incrlearn {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A vector with (near-)zero norm reached a normalization step.
/// Signals a collapsed feature map; never silently passed through.
class DegenerateVectorError : public Error {
public:
  using Error::Error;
};

/// An operation that requires at least one element received none.
class EmptyInputError : public Error {
public:
  using Error::Error;
};

/// Dimension mismatch between operands.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A classification request was made before any class was observed.
class NoClassesError : public Error {
public:
  using Error::Error;
};

/// A training target fell outside [0, 1].
class InvalidTargetError : public Error {
public:
  using Error::Error;
};

/// The training loss became non-finite. Carries where it happened.
class DivergenceError : public Error {
public:
  DivergenceError(int epoch, int step, const std::string& what)
      : Error(what), epoch(epoch), step(step) {}
  int epoch;
  int step;
};

/// floor(K / t) reached zero: the memory budget cannot hold one
/// exemplar per observed class.
class BudgetExhaustedError : public Error {
public:
  using Error::Error;
};

/// Requested more exemplars than the class has samples.
class InsufficientSamplesError : public Error {
public:
  using Error::Error;
};

/// Asked to reduce an exemplar list to more items than it holds.
class InvalidReductionError : public Error {
public:
  using Error::Error;
};

/// A class has an empty exemplar list where prototypes are required.
class MissingExemplarsError : public Error {
public:
  using Error::Error;
};

/// A class has no retained training data where full-data means are required.
class MissingDataError : public Error {
public:
  using Error::Error;
};

/// Class ids in a training batch collide with already-observed classes,
/// or are otherwise inconsistent with the incremental schedule.
class ScheduleError : public Error {
public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error(what), line(line) {}
  std::size_t line;
};

/// A dataset ended up with no classes or no samples.
class EmptyDatasetError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration value (sizes, unknown names, bad ranges).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Checkpoint file carries an unknown magic or format version.
class VersionMismatchError : public Error {
public:
  using Error::Error;
};

/// Checkpoint file ended before the manifest said it would.
class TruncationError : public Error {
public:
  using Error::Error;
};

/// A value inside a loaded checkpoint violates a type invariant.
/// The message names the failed invariant.
class InvariantViolationError : public Error {
public:
  using Error::Error;
};

}  // namespace incrlearn
