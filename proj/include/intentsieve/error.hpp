#ifndef INTENTSIEVE_ERROR_HPP
#define INTENTSIEVE_ERROR_HPP

#include <functional>
#include <stdexcept>
#include <string>

namespace isv {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised when the text sieve routes an utterance to the acoustic stage but
/// no audio was supplied and the fallback policy is `error`. Carries the
/// sieve's probability vector so the caller can still apply its own policy.
class AudioRequired : public Error {
 public:
  AudioRequired(const std::string& msg, std::vector<double> fci_probs)
      : Error(msg), fci_probs_(std::move(fci_probs)) {}
  const std::vector<double>& fci_probs() const { return fci_probs_; }

 private:
  std::vector<double> fci_probs_;
};

using WarningHandler = std::function<void(const std::string&)>;

/// Install a handler for non-fatal diagnostics (default: stderr).
/// Passing an empty function restores the default.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace isv

#endif  // INTENTSIEVE_ERROR_HPP
