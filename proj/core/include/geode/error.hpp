#pragma once

#include <stdexcept>
#include <string>

namespace geode {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invariant-violating input files (decoder, graph, latents).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Vector or matrix sizes that do not agree with each other.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range MetricConfig or search arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace geode
