#include "telecomrag/text.hpp"

#include <openssl/evp.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <array>
#include <memory>

#include "telecomrag/errors.hpp"

namespace telecomrag::text {
namespace {

icu::UnicodeString to_unicode(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    if (c < 0) return false;
  }
  return true;
}

std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  offsets.reserve(s.size() + 1);
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    offsets.push_back(static_cast<std::size_t>(i));
    UChar32 c;
    U8_NEXT(p, i, len, c);
    (void)c;
  }
  offsets.push_back(s.size());
  return offsets;
}

std::size_t code_point_count(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  std::size_t n = 0;
  while (i < len) {
    U8_FWD_1(p, i, len);
    ++n;
  }
  return n;
}

std::string_view truncate_chars(std::string_view s, std::size_t max_chars) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  for (std::size_t n = 0; n < max_chars && i < len; ++n) {
    U8_FWD_1(p, i, len);
  }
  return s.substr(0, static_cast<std::size_t>(i));
}

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString out = normalizer->normalize(to_unicode(s), status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  return to_utf8(out);
}

std::string to_lower(std::string_view s) {
  icu::UnicodeString u = to_unicode(s);
  u.toLower(icu::Locale::getRoot());
  return to_utf8(u);
}

std::vector<std::string> alnum_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  int32_t token_start = -1;
  while (i < len) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(p, i, len, c);
    const bool alnum = c >= 0 && u_isalnum(c);
    if (alnum && token_start < 0) {
      token_start = at;
    } else if (!alnum && token_start >= 0) {
      tokens.emplace_back(s.substr(static_cast<std::size_t>(token_start),
                                   static_cast<std::size_t>(at - token_start)));
      token_start = -1;
    }
  }
  if (token_start >= 0) tokens.emplace_back(s.substr(static_cast<std::size_t>(token_start)));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &digest_len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string trim(std::string_view s) {
  constexpr std::string_view kWs = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(kWs);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWs);
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace telecomrag::text
