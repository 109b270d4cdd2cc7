#pragma once

#include <stdexcept>
#include <string>

namespace pathlet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid spatial unit, malformed domain description or dangling adjacency.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector dimensions that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Hyperparameters or model/request combinations that are not allowed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Empty or otherwise unusable input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A noisy observation could not be explained by the dictionary.
class DenoiseError : public Error {
 public:
  using Error::Error;
};

/// Planted corpus generation ran out of retries.
class SynthError : public Error {
 public:
  using Error::Error;
};

/// Sampling could not produce a non-empty path.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathlet
