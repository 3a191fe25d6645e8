#pragma once

#include <stdexcept>
#include <string>

namespace agentjudge {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad or inconsistent configuration (CLI exits with code 2 on these).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input documents (trajectory JSONL, suite files, rankings).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// --- model gateway -------------------------------------------------------

class GatewayError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class AuthFailure : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class MalformedResponse : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// A scripted backend was asked for a request digest it has no entry for.
class UnknownScriptedRequest : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// --- perception / judges --------------------------------------------------

class CaptionError : public Error {
 public:
  using Error::Error;
};

/// A caption-based prompt was requested for a state with no caption.
class MissingCaption : public Error {
 public:
  using Error::Error;
};

/// Model output had no Status line to parse.
class MissingStatus : public Error {
 public:
  using Error::Error;
};

/// Model output had a Status line whose value is neither success nor failure.
class UnrecognizedStatus : public Error {
 public:
  using Error::Error;
};

/// Model output had no Response line to parse.
class MissingResponse : public Error {
 public:
  using Error::Error;
};

/// Model output named a step category outside the four known literals.
class UnrecognizedCategory : public Error {
 public:
  using Error::Error;
};

/// Evaluation failed at a specific step of a trajectory.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_ = -1;
};

// --- refine / metrics -----------------------------------------------------

/// Reward sequence granularity does not match what the operation needs.
class GranularityMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MismatchedPolicySets : public Error {
 public:
  using Error::Error;
};

class ZeroBaseline : public Error {
 public:
  using Error::Error;
};

// --- sandbox --------------------------------------------------------------

/// A graph edge or task references a screen that does not exist.
class UnreachableScreen : public Error {
 public:
  using Error::Error;
};

}  // namespace agentjudge
