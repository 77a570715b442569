#pragma once

#include <stdexcept>
#include <string>

namespace surveyor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument to an operation (K < 1, zero-norm query, empty topic, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unusable configuration (cycles, empty store, bad config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (duplicate outline titles, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// State document is parseable but misses a required field.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& msg)
      : Error(msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// State document (or other structured input) failed to parse at all.
class FormatError : public Error {
 public:
  using Error::Error;
};

// --- provider gateway ---

/// Authentication rejected; never retried.
class CredentialError : public Error {
 public:
  using Error::Error;
};

/// Transient failures exhausted the retry budget.
class ProviderUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Provider answered but the payload does not match the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Transient network failure (DBLP lookups, store connectivity).
class NetworkError : public Error {
 public:
  using Error::Error;
};

// --- stage-specific ---

/// Outline response could not be parsed into the requested section count.
class OutlineParseError : public Error {
 public:
  OutlineParseError(const std::string& msg, const std::string& raw)
      : Error(msg), raw_(raw) {}
  const std::string& raw_response() const { return raw_; }

 private:
  std::string raw_;
};

/// A stage ran before its inputs were produced.
class StageOrderError : public Error {
 public:
  using Error::Error;
};

class SynthesisError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// A graph node handler failed; carries the node name.
class ExecutionError : public Error {
 public:
  ExecutionError(const std::string& node, const std::string& msg)
      : Error(msg), node_(node) {}
  const std::string& node() const { return node_; }

 private:
  std::string node_;
};

// --- judge ---

/// A rubric dimension is missing from the judge response.
class ScoreParseError : public Error {
 public:
  ScoreParseError(const std::string& dimension, const std::string& msg)
      : Error(msg), dimension_(dimension) {}
  const std::string& dimension() const { return dimension_; }

 private:
  std::string dimension_;
};

/// A parsed score lies outside the 1..5 scale.
class ScoreRangeError : public Error {
 public:
  using Error::Error;
};

/// Judge response unusable even after the format-reminder reprompt.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& msg, const std::string& raw)
      : Error(msg), raw_(raw) {}
  const std::string& raw_response() const { return raw_; }

 private:
  std::string raw_;
};

}  // namespace surveyor
