#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace notamkit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- NOTAM parsing -------------------------------------------------------

class MissingEField : public Error {
 public:
  MissingEField() : Error("notice has no E) field") {}
};

class MalformedField : public Error {
 public:
  MalformedField(std::string label, const std::string& detail)
      : Error("malformed field " + label + ": " + detail), label_(std::move(label)) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

class MalformedQCode : public Error {
 public:
  explicit MalformedQCode(const std::string& code) : Error("malformed Q-code '" + code + "'") {}
};

class NotARunwayToken : public Error {
 public:
  explicit NotARunwayToken(const std::string& token)
      : Error("not a runway token: '" + token + "'") {}
};

class InvalidRecord : public Error {
 public:
  using Error::Error;
};

// --- data files ----------------------------------------------------------

/// A data file failed validation. Carries the file and 1-based line.
class FormatError : public Error {
 public:
  FormatError(std::string file, std::size_t line, const std::string& detail)
      : Error(file + ":" + std::to_string(line) + ": " + detail),
        file_(std::move(file)),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class DanglingEdge : public Error {
 public:
  DanglingEdge(const std::string& from, const std::string& relation, const std::string& to)
      : Error("edge references unknown node: " + from + " -[" + relation + "]-> " + to) {}
};

class InvalidPattern : public Error {
 public:
  using Error::Error;
};

// --- rules ---------------------------------------------------------------

class NonPositiveValue : public Error {
 public:
  explicit NonPositiveValue(double v) : Error("value must be positive, got " + std::to_string(v)) {}
};

// --- policy / training ---------------------------------------------------

class UnknownCandidate : public Error {
 public:
  using Error::Error;
};

class CandidateNotRepresentable : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  NonFiniteGradient() : Error("gradient contains a non-finite component") {}
};

class DegenerateTriple : public Error {
 public:
  DegenerateTriple() : Error("preference triple has chosen == rejected") {}
  explicit DegenerateTriple(const std::string& detail) : Error(detail) {}
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// --- generation ----------------------------------------------------------

/// Failure of a generator call. Subclasses are distinguishable so callers
/// can decide between recording an incorrect response and dropping a slot.
class GatewayError : public Error {
 public:
  using Error::Error;
};

class Timeout : public GatewayError {
 public:
  Timeout() : GatewayError("generator request timed out") {}
  explicit Timeout(const std::string& detail) : GatewayError(detail) {}
};

class RemoteError : public GatewayError {
 public:
  RemoteError(int status, const std::string& detail)
      : GatewayError("remote error " + std::to_string(status) + ": " + detail), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ExtractionFailed : public GatewayError {
 public:
  ExtractionFailed() : GatewayError("reply contained no well-formed record block") {}
};

class UnknownTemplate : public Error {
 public:
  explicit UnknownTemplate(const std::string& id) : Error("unknown prompt template '" + id + "'") {}
};

class MultiviewDegraded : public Error {
 public:
  MultiviewDegraded(std::size_t surviving, std::size_t requested)
      : Error("multiview quorum lost: " + std::to_string(surviving) + " of " +
              std::to_string(requested) + " views survived") {}
};

}  // namespace notamkit
