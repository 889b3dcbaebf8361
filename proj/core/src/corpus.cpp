#include "telecomrag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/text.hpp"

namespace fs = std::filesystem;

namespace telecomrag::corpus {
namespace {

constexpr std::size_t kMaxTitleChars = 200;

bool is_horizontal_space(char32_t c) {
  if (c == U' ' || c == U'\t' || c == U'\v' || c == U'\f') return true;
  // Unicode space separators (Zs).
  return c == 0x00A0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

std::u32string decode(std::string_view s) {
  std::u32string out;
  const auto offsets = text::code_point_offsets(s);
  out.reserve(offsets.size());
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(s.data() + offsets[i]);
    const std::size_t n = offsets[i + 1] - offsets[i];
    char32_t c = 0;
    if (n == 1) {
      c = p[0];
    } else if (n == 2) {
      c = (char32_t(p[0] & 0x1F) << 6) | (p[1] & 0x3F);
    } else if (n == 3) {
      c = (char32_t(p[0] & 0x0F) << 12) | (char32_t(p[1] & 0x3F) << 6) | (p[2] & 0x3F);
    } else {
      c = (char32_t(p[0] & 0x07) << 18) | (char32_t(p[1] & 0x3F) << 12) |
          (char32_t(p[2] & 0x3F) << 6) | (p[3] & 0x3F);
    }
    out.push_back(c);
  }
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string sanitize_stem(std::string_view stem) {
  std::string out;
  out.reserve(stem.size());
  for (unsigned char c : stem) {
    out.push_back(std::isalnum(c) || c == '.' || c == '-' || c == '_' ? static_cast<char>(c) : '_');
  }
  if (out.empty()) out = "doc";
  return out;
}

std::string derive_title(std::string_view cleaned, std::string_view fallback) {
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    auto eol = cleaned.find('\n', pos);
    if (eol == std::string_view::npos) eol = cleaned.size();
    std::string_view line = cleaned.substr(pos, eol - pos);
    while (!line.empty() && (line.front() == '#' || line.front() == ' ')) line.remove_prefix(1);
    std::string trimmed = text::trim(line);
    if (!trimmed.empty()) return std::string(text::truncate_chars(trimmed, kMaxTitleChars));
    pos = eol + 1;
  }
  return std::string(fallback);
}

bool is_space_byte(char c) { return c == ' ' || c == '\n' || c == '\t'; }

}  // namespace

void ChunkingParams::validate() const {
  if (chunk_size == 0) throw InvalidParams("chunk_size must be positive");
  if (overlap >= chunk_size) {
    throw InvalidParams("overlap (" + std::to_string(overlap) + ") must be smaller than chunk_size (" +
                        std::to_string(chunk_size) + ")");
  }
}

const std::set<std::string>& default_extensions() {
  static const std::set<std::string> kExtensions{".txt", ".md"};
  return kExtensions;
}

std::string clean_text(std::string_view raw) {
  const std::u32string cps = decode(text::nfc(raw));

  // Split into lines, normalizing CRLF and lone CR to LF.
  std::vector<std::u32string> lines(1);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (c == U'\r' || c == U'\n') {
      if (c == U'\r' && i + 1 < cps.size() && cps[i + 1] == U'\n') ++i;
      lines.emplace_back();
      continue;
    }
    auto& line = lines.back();
    if (is_horizontal_space(c)) {
      if (line.empty() || line.back() != U' ') line.push_back(U' ');
    } else {
      line.push_back(c);
    }
  }

  std::string out;
  out.reserve(raw.size());
  int blank_run = 0;
  bool first = true;
  for (auto& line : lines) {
    while (!line.empty() && line.back() == U' ') line.pop_back();
    if (line.empty()) {
      ++blank_run;
      if (blank_run > 2) continue;
    } else {
      blank_run = 0;
    }
    if (!first) out.push_back('\n');
    first = false;
    for (char32_t c : line) append_utf8(out, c);
  }
  return text::trim(out);
}

std::vector<Chunk> chunk_text(std::string_view cleaned, const ChunkingParams& params,
                              std::string_view doc_id) {
  params.validate();
  if (cleaned.empty()) throw EmptyInput("cannot chunk empty text");

  const auto offsets = text::code_point_offsets(cleaned);
  const std::size_t n = offsets.size() - 1;
  auto char_at_is_space = [&](std::size_t i) {
    return offsets[i + 1] - offsets[i] == 1 && is_space_byte(cleaned[offsets[i]]);
  };

  std::vector<Chunk> chunks;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = std::min(start + params.chunk_size, n);
    if (params.snap_to_whitespace && end < n && !char_at_is_space(end - 1) && !char_at_is_space(end)) {
      const std::size_t floor = end > kSnapWindow ? end - kSnapWindow : 0;
      for (std::size_t j = end - 1; j > start && j >= floor; --j) {
        if (char_at_is_space(j)) {
          // The snapped chunk must still extend past the next chunk's start.
          if (j + 1 - start > params.overlap) end = j + 1;
          break;
        }
      }
    }

    Chunk c;
    c.doc_id = std::string(doc_id);
    c.index = chunks.size();
    c.chunk_id = c.doc_id + "#" + std::to_string(c.index);
    c.start_char = start;
    c.end_char = end;
    c.text = std::string(cleaned.substr(offsets[start], offsets[end] - offsets[start]));
    chunks.push_back(std::move(c));

    if (end == n) break;
    start = end - params.overlap;
  }
  return chunks;
}

std::string make_doc_id(std::string_view file_stem, std::string_view content_hash) {
  return sanitize_stem(file_stem) + "-" + std::string(content_hash.substr(0, 16));
}

std::optional<std::string> parse_spec_label(std::string_view file_name) {
  static const std::regex kDotted(R"((?:^|[^0-9])([0-9]{2})\.([0-9]{3})(?:[^0-9]|$))");
  static const std::regex kCompact(R"((?:^|[^0-9])([0-9]{2})([0-9]{3})(?:[^0-9]|$))");
  const std::string name(file_name);
  std::smatch m;
  if (std::regex_search(name, m, kDotted) || std::regex_search(name, m, kCompact)) {
    return "TS " + m[1].str() + "." + m[2].str();
  }
  return std::nullopt;
}

std::optional<SourceDocument> make_document(const fs::path& path, std::string_view raw) {
  std::string cleaned = clean_text(raw);
  if (cleaned.empty()) return std::nullopt;
  SourceDocument doc;
  doc.path = path;
  doc.content_hash = text::sha256_hex(cleaned);
  doc.doc_id = make_doc_id(path.stem().string(), doc.content_hash);
  doc.title = derive_title(cleaned, path.stem().string());
  doc.spec_label = parse_spec_label(path.filename().string());
  doc.char_count = text::code_point_count(cleaned);
  doc.text = std::move(cleaned);
  return doc;
}

LoadResult load_directory(const fs::path& root, const std::set<std::string>& extensions) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw RootNotFound(root.string());

  std::set<std::string> wanted;
  for (const auto& e : extensions) wanted.insert(lower_ascii(e));

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    if (wanted.count(lower_ascii(it->path().extension().string())) != 0) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  LoadResult result;
  std::map<std::string, int> id_uses;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    if (!in || !(buf << in.rdbuf())) {
      result.errors.push_back({path, LoadErrorKind::kReadError, "unreadable file"});
      continue;
    }
    const std::string raw = buf.str();
    if (!text::is_valid_utf8(raw)) {
      result.errors.push_back({path, LoadErrorKind::kDecodeError, "invalid UTF-8"});
      continue;
    }
    auto doc = make_document(path, raw);
    if (!doc) {
      result.errors.push_back({path, LoadErrorKind::kEmptyAfterCleaning, "empty after cleaning"});
      continue;
    }
    // Identical stem and content in two places would collide; suffix the later ones.
    const int uses = id_uses[doc->doc_id]++;
    if (uses > 0) doc->doc_id += "-" + std::to_string(uses + 1);
    result.documents.push_back(std::move(*doc));
  }
  return result;
}

void to_json(nlohmann::json& j, const Chunk& c) {
  j = nlohmann::json{{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id},       {"index", c.index},
                     {"start_char", c.start_char}, {"end_char", c.end_char}, {"text", c.text}};
}

void from_json(const nlohmann::json& j, Chunk& c) {
  j.at("chunk_id").get_to(c.chunk_id);
  c.doc_id = j.value("doc_id", std::string{});
  c.index = j.value("index", std::size_t{0});
  c.start_char = j.value("start_char", std::size_t{0});
  c.end_char = j.value("end_char", std::size_t{0});
  c.text = j.value("text", std::string{});
}

void to_json(nlohmann::json& j, const ManifestEntry& e) {
  const auto& d = e.document;
  j = nlohmann::json{{"doc_id", d.doc_id},
                     {"path", d.path.generic_string()},
                     {"title", d.title},
                     {"spec_label", d.spec_label ? nlohmann::json(*d.spec_label) : nlohmann::json(nullptr)},
                     {"content_hash", d.content_hash},
                     {"char_count", d.char_count},
                     {"num_chunks", e.num_chunks}};
}

void from_json(const nlohmann::json& j, ManifestEntry& e) {
  auto& d = e.document;
  j.at("doc_id").get_to(d.doc_id);
  d.path = j.at("path").get<std::string>();
  j.at("title").get_to(d.title);
  const auto& label = j.at("spec_label");
  d.spec_label = label.is_null() ? std::nullopt : std::optional<std::string>(label.get<std::string>());
  j.at("content_hash").get_to(d.content_hash);
  j.at("char_count").get_to(d.char_count);
  j.at("num_chunks").get_to(e.num_chunks);
}

void write_manifest(const fs::path& file, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + file.string());
  for (const auto& e : entries) out << nlohmann::json(e).dump() << '\n';
  if (!out) throw IoError("failed writing manifest: " + file.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read manifest: " + file.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      entries.push_back(nlohmann::json::parse(line).get<ManifestEntry>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

}  // namespace telecomrag::corpus
