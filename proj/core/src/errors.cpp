#include "telecomrag/errors.hpp"

#include <utility>

namespace telecomrag {

RootNotFound::RootNotFound(const std::string& root)
    : Error("corpus root not found: " + root) {}

NoTokens::NoTokens() : Error("text has no alphanumeric tokens") {}

DimMismatch::DimMismatch(std::size_t expected, std::size_t actual)
    : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
            std::to_string(actual)),
      expected_(expected),
      actual_(actual) {}

DuplicateId::DuplicateId(const std::string& id) : Error("duplicate id: " + id) {}

FormatError::FormatError(std::string reason)
    : Error("format error: " + reason), reason_(std::move(reason)) {}

VersionMismatch::VersionMismatch(int expected, int actual)
    : Error("format version mismatch: expected " + std::to_string(expected) + ", got " +
            std::to_string(actual)) {}

ProviderError::ProviderError(int status, std::string body_excerpt)
    : Error("provider error (status " + std::to_string(status) + "): " + body_excerpt),
      status_(status),
      body_excerpt_(std::move(body_excerpt)) {}

UnknownSession::UnknownSession(const std::string& session_id)
    : Error("unknown session: " + session_id) {}

}  // namespace telecomrag
