#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace psumm {

// Base of every error thrown by the library. Callers that only care about
// "something in the pipeline failed" can catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset line could not be parsed. line is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A record parsed but violates an invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string dialog_id, const std::string& what)
      : Error("dialog '" + dialog_id + "': " + what), dialog_id_(std::move(dialog_id)) {}
  const std::string& dialog_id() const noexcept { return dialog_id_; }

 private:
  std::string dialog_id_;
};

class UnknownFormatError : public Error {
 public:
  using Error::Error;
};

class EmptyDialogError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(std::vector<std::string> unmatched)
      : Error(describe(unmatched)), unmatched_(std::move(unmatched)) {}
  const std::vector<std::string>& unmatched() const noexcept { return unmatched_; }

 private:
  static std::string describe(const std::vector<std::string>& unmatched) {
    std::string out = "could not align " + std::to_string(unmatched.size()) + " summary sentence(s):";
    for (const auto& s : unmatched) out += " [" + s + "]";
    return out;
  }
  std::vector<std::string> unmatched_;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class UnparseableAnswerError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeIndexError : public Error {
 public:
  OutOfRangeIndexError(std::vector<long long> bad, std::size_t n_sentences)
      : Error(describe(bad, n_sentences)), bad_(std::move(bad)) {}
  const std::vector<long long>& bad_indices() const noexcept { return bad_; }

 private:
  static std::string describe(const std::vector<long long>& bad, std::size_t n) {
    std::string out = "indices out of range 1.." + std::to_string(n) + ":";
    for (auto b : bad) out += " " + std::to_string(b);
    return out;
  }
  std::vector<long long> bad_;
};

class DuplicateSelectionError : public Error {
 public:
  using Error::Error;
};

class EmptySpansError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class EmptyGenerationError : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptyReferencesError : public Error {
 public:
  using Error::Error;
};

// Backend failures.
class BackendError : public Error {
 public:
  using Error::Error;
};

class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& what, int status = 0)
      : BackendError(what), status_(status) {}
  // HTTP status, or 0 when the request never got a response.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class RateLimitError : public TransportError {
 public:
  explicit RateLimitError(const std::string& what) : TransportError(what, 429) {}
};

class TokenLimitError : public BackendError {
 public:
  using BackendError::BackendError;
};

class MissingLogprobsError : public BackendError {
 public:
  using BackendError::BackendError;
};

class UnknownHandleError : public BackendError {
 public:
  using BackendError::BackendError;
};

class TrainingError : public BackendError {
 public:
  using BackendError::BackendError;
};

// pseudolabel_all saw too many failures to trust the labeler.
class LabelerFailureError : public Error {
 public:
  using Error::Error;
};

}  // namespace psumm
