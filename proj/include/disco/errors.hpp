#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace disco {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("empty dataset") {}
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t index, std::string reason)
      : Error("malformed record at index " + std::to_string(index) + ": " + reason),
        index_(index),
        reason_(std::move(reason)) {}

  std::size_t index() const { return index_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t index_;
  std::string reason_;
};

class InvalidProportion : public Error {
 public:
  explicit InvalidProportion(double p)
      : Error("domain proportion must lie in (0, 1], got " + std::to_string(p)) {}
};

class EmptyGroup : public Error {
 public:
  EmptyGroup() : Error("empty rollout group") {}
};

class UnknownDomain : public Error {
 public:
  explicit UnknownDomain(const std::string& domain) : Error("unknown domain '" + domain + "'") {}
};

class NonFiniteLogProb : public Error {
 public:
  NonFiniteLogProb() : Error("non-finite log-probability") {}
};

class MismatchedGroupSizes : public Error {
 public:
  explicit MismatchedGroupSizes(const std::string& what) : Error("mismatched group sizes: " + what) {}
};

class MissingLogProbs : public Error {
 public:
  explicit MissingLogProbs(const std::string& what) : Error("missing log-probabilities: " + what) {}
};

class UnknownPrompt : public Error {
 public:
  explicit UnknownPrompt(const std::string& key) : Error("unknown prompt '" + key + "'") {}
};

class TokenOutOfRange : public Error {
 public:
  TokenOutOfRange(std::size_t token, std::size_t vocab)
      : Error("token " + std::to_string(token) + " out of range for vocabulary of size " +
              std::to_string(vocab)) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t got, std::size_t expected)
      : Error("length mismatch: got " + std::to_string(got) + ", expected " +
              std::to_string(expected)) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};

class InvalidSpec : public Error {
 public:
  explicit InvalidSpec(const std::string& what) : Error("invalid spec: " + what) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& what) : Error("invalid config: " + what) {}
};

class InsufficientPool : public Error {
 public:
  InsufficientPool(const std::string& domain, std::size_t have, std::size_t need)
      : Error("insufficient pool for domain '" + domain + "': have " + std::to_string(have) +
              ", need " + std::to_string(need)),
        domain_(domain) {}

  const std::string& domain() const { return domain_; }

 private:
  std::string domain_;
};

class EmptyEvalSet : public Error {
 public:
  EmptyEvalSet() : Error("empty evaluation set") {}
};

class DegenerateVariance : public Error {
 public:
  DegenerateVariance() : Error("paired differences have zero variance") {}
};

class ConfigParseError : public Error {
 public:
  ConfigParseError(std::size_t line, std::string reason)
      : Error("config parse error at line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(std::move(reason)) {}

  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class MissingReport : public Error {
 public:
  explicit MissingReport(const std::string& dir) : Error("no report.json in '" + dir + "'") {}
};

}  // namespace disco
