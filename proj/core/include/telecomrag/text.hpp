#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 and hashing helpers shared by the corpus and embedder modules.
// All "character" counts in the library are Unicode code points.
namespace telecomrag::text {

bool is_valid_utf8(std::string_view s);

/// Byte offset of every code point in `s`, followed by `s.size()` as a
/// sentinel, so code point i spans [offsets[i], offsets[i + 1]).
/// Invalid sequences count as one code point per byte.
std::vector<std::size_t> code_point_offsets(std::string_view s);

std::size_t code_point_count(std::string_view s);

/// Prefix of `s` holding at most `max_chars` code points.
std::string_view truncate_chars(std::string_view s, std::size_t max_chars);

std::string nfc(std::string_view s);

/// Locale-independent (root locale) full Unicode lowercasing.
std::string to_lower(std::string_view s);

/// Splits on every code point that is not a Unicode letter or digit.
std::vector<std::string> alnum_tokens(std::string_view s);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Lowercase hex SHA-256 digest (64 chars).
std::string sha256_hex(std::string_view bytes);

std::string trim(std::string_view s);

}  // namespace telecomrag::text
