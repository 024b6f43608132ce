#pragma once

#include <stdexcept>
#include <string>

namespace teta {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input does not satisfy an operation's precondition (negative distance,
// arrival before observation, empty sample set, ...).
struct DomainError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

// A required CSV column is missing; fatal for the whole file.
struct SchemaError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct UnknownLine : Error {
  explicit UnknownLine(std::string line_name)
      : Error("unknown bus line: " + line_name), name(std::move(line_name)) {}
  std::string name;
};

struct DivergenceError : Error {
  DivergenceError(int epoch, long batch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch) + ": " + what),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  long batch;
};

struct VersionMismatch : Error {
  VersionMismatch(unsigned have, unsigned found)
      : Error("model file format version mismatch: have " +
              std::to_string(have) + ", found " + std::to_string(found)),
        have(have),
        found(found) {}
  unsigned have;
  unsigned found;
};

struct IntegrityError : Error {
  using Error::Error;
};

}  // namespace teta
