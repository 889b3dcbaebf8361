#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace telecomrag {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class RootNotFound : public Error {
 public:
  explicit RootNotFound(const std::string& root);
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class NoTokens : public Error {
 public:
  NoTokens();
};

class DimMismatch : public Error {
 public:
  DimMismatch(std::size_t expected, std::size_t actual);

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id);
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed persisted data. `reason()` names what failed validation.
class FormatError : public Error {
 public:
  explicit FormatError(std::string reason);

  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

class VersionMismatch : public Error {
 public:
  VersionMismatch(int expected, int actual);
};

/// A remote embedding or chat provider failed after retries were exhausted.
/// `status` is the last HTTP status seen, or 0 for transport failures.
class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body_excerpt);

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class EmptyResponse : public Error {
 public:
  using Error::Error;
};

class UnknownSession : public Error {
 public:
  explicit UnknownSession(const std::string& session_id);
};

}  // namespace telecomrag
