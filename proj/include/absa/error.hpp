#pragma once

#include <stdexcept>
#include <string>

namespace absa {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between tensors; the message names both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// Token or id outside the vocabulary / embedding table.
struct VocabError : Error {
  using Error::Error;
};

// Malformed data or config file; message carries the line number.
struct ParseError : Error {
  using Error::Error;
};

// Bad span annotation (overlap, out of range).
struct AnnotationError : Error {
  using Error::Error;
};

// A tag sequence violates the BIOES validity automaton.
struct ValidityError : Error {
  using Error::Error;
};

// Training diverged or could not proceed; message carries the step.
struct TrainError : Error {
  using Error::Error;
};

// Unknown key, unparsable value or bad command line.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace absa
