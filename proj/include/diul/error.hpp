#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace diul {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A vector too close to zero was asked to be normalized.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// Training was requested on data that cannot support it (e.g. one domain).
class DegenerateTrainingError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary file; carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A UDG split request violates one of the support constraints.
/// `equation()` is one of "Eq. 1", "Eq. 2" or "setting".
class ConstraintError : public Error {
 public:
  ConstraintError(std::string equation, const std::string& what)
      : Error(equation + ": " + what), equation_(std::move(equation)) {}
  const std::string& equation() const noexcept { return equation_; }

 private:
  std::string equation_;
};

/// Configuration document failed validation; `path()` is the dotted field path.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace diul
