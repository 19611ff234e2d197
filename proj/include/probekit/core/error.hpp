#pragma once

#include <stdexcept>
#include <string>

namespace probekit {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  internal = 1,
  validation = 2,
  network = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& what) : Error(ErrorKind::network, what) {}
};

// A remote target answered, but with something we refuse to record.
class ProtocolError : public NetworkError {
 public:
  ProtocolError(const std::string& what, std::string raw_body)
      : NetworkError(what), raw_body_(std::move(raw_body)) {}

  const std::string& raw_body() const noexcept { return raw_body_; }

 private:
  std::string raw_body_;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(const std::string& what) : Error(ErrorKind::internal, what) {}
};

}  // namespace probekit
