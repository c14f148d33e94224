#pragma once

#include <stdexcept>
#include <string>

namespace tlmdp {

// Base of every error raised by the library. Each subclass maps to one
// failure category so callers (and the CLI) can react per category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad hyperparameter, shape mismatch, unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed caller-supplied data (out-of-range index, empty list, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// A numerical precondition was violated (negative radicand, NaN, ...).
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

// The generate-verify-retry loop exhausted its retry budget.
class ExtractionFailure : public Error {
 public:
  ExtractionFailure(const std::string& input_id, int attempts)
      : Error("factor extraction failed for input '" + input_id + "' after " +
              std::to_string(attempts) + " attempts"),
        input_id_(input_id),
        attempts_(attempts) {}

  const std::string& input_id() const { return input_id_; }
  int attempts() const { return attempts_; }

 private:
  std::string input_id_;
  int attempts_;
};

// The image vector was too close to zero to normalize.
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

// Checkpoint could not be read: truncated, wrong magic, version mismatch.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace tlmdp
