#pragma once

#include <stdexcept>
#include <string>

namespace itm {

enum class ErrorKind {
  Format,         // malformed or unsupported file format
  Data,           // decoded values violate an invariant
  Write,          // output could not be written
  Compatibility,  // profile / checkpoint version or content mismatch
  Style,          // unknown or misused style identifier
  Size,           // image too small for the network
  Shape,          // tensor shapes do not match
  Pairing,        // HDR / target pairs disagree
  Corpus,         // no usable training material
  Domain,         // argument outside the function's domain
  Training,       // optimization diverged
  Usage,          // invalid configuration or arguments
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& message) : Error(K, message) {}
};

using FormatError = TypedError<ErrorKind::Format>;
using DataError = TypedError<ErrorKind::Data>;
using WriteError = TypedError<ErrorKind::Write>;
using CompatibilityError = TypedError<ErrorKind::Compatibility>;
using StyleError = TypedError<ErrorKind::Style>;
using SizeError = TypedError<ErrorKind::Size>;
using ShapeError = TypedError<ErrorKind::Shape>;
using PairingError = TypedError<ErrorKind::Pairing>;
using CorpusError = TypedError<ErrorKind::Corpus>;
using DomainError = TypedError<ErrorKind::Domain>;
using TrainingError = TypedError<ErrorKind::Training>;
using UsageError = TypedError<ErrorKind::Usage>;

}  // namespace itm
