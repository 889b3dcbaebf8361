#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/text.hpp"
#include "telecomrag/vindex.hpp"

namespace fs = std::filesystem;

namespace telecomrag::vindex {
namespace {

constexpr char kVectorMagic[8] = {'T', 'R', 'A', 'G', 'V', 'E', 'C', '1'};
constexpr char kGraphMagic[8] = {'T', 'R', 'A', 'G', 'G', 'R', 'F', '1'};

constexpr const char* kMetaFile = "index.meta.json";
constexpr const char* kVectorsFile = "vectors.bin";
constexpr const char* kGraphFile = "graph.bin";
constexpr const char* kChunksFile = "chunks.jsonl";

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view data, const char* file) : data_(data), file_(file) {}

  void expect_magic(const char (&magic)[8]) {
    if (data_.size() < 8 || std::memcmp(data_.data(), magic, 8) != 0) fail("bad magic bytes");
    pos_ = 8;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    need(2);
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
    pos_ += 2;
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
    pos_ += 4;
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
  }
  void expect_end() const {
    if (pos_ != data_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const { throw FormatError(std::string(file_) + ": " + what); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated");
  }
  std::string_view data_;
  const char* file_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in && !in.eof()) throw IoError("cannot read " + path.string());
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

nlohmann::json params_json(const HnswParams& p) {
  return {{"m", p.m},          {"m0", p.m0}, {"ef_construction", p.ef_construction},
          {"ef_search", p.ef_search}, {"ml", p.ml}, {"seed", p.seed}};
}

}  // namespace

void save(const HnswIndex& index, const fs::path& dir, std::span<const corpus::Chunk> chunks) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const std::size_t n = index.size();
  const std::size_t dim = index.dim();

  std::string vectors(kVectorMagic, sizeof kVectorMagic);
  vectors.reserve(8 + n * dim * 4);
  for (HnswIndex::NodeId node = 0; node < n; ++node) {
    for (float f : index.vector(node)) put_u32(vectors, std::bit_cast<std::uint32_t>(f));
  }

  std::string graph(kGraphMagic, sizeof kGraphMagic);
  for (HnswIndex::NodeId node = 0; node < n; ++node) {
    const int level = index.level(node);
    graph.push_back(static_cast<char>(static_cast<std::uint8_t>(level)));
    for (int layer = 0; layer <= level; ++layer) {
      const auto& nbs = index.neighbors(node, layer);
      put_u16(graph, static_cast<std::uint16_t>(nbs.size()));
      for (auto nb : nbs) put_u32(graph, nb);
    }
  }

  std::unordered_map<std::string_view, const corpus::Chunk*> records;
  for (const auto& c : chunks) records.emplace(c.chunk_id, &c);
  std::string chunk_lines;
  for (HnswIndex::NodeId node = 0; node < n; ++node) {
    const auto& id = index.chunk_id(node);
    const auto it = records.find(id);
    const nlohmann::json j = it != records.end() ? nlohmann::json(*it->second) : nlohmann::json{{"chunk_id", id}};
    chunk_lines += j.dump();
    chunk_lines += '\n';
  }

  const nlohmann::json meta{
      {"format_version", kFormatVersion},
      {"dim", dim},
      {"count", n},
      {"params", params_json(index.params())},
      {"entry_point", index.entry_point() ? nlohmann::json(*index.entry_point()) : nlohmann::json(nullptr)},
      {"level_draws", index.level_draws()},
  };

  write_file_atomic(dir / kVectorsFile, vectors);
  write_file_atomic(dir / kGraphFile, graph);
  write_file_atomic(dir / kChunksFile, chunk_lines);
  // Meta last: a directory without a current meta file is never loadable.
  write_file_atomic(dir / kMetaFile, meta.dump(2) + "\n");
}

std::vector<corpus::Chunk> load_chunks(const fs::path& dir) {
  const std::string data = read_file(dir / kChunksFile);
  std::vector<corpus::Chunk> chunks;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    auto eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    ++line_no;
    const std::string_view line(data.data() + pos, eol - pos);
    pos = eol + 1;
    if (text::trim(line).empty()) continue;
    try {
      chunks.push_back(nlohmann::json::parse(line).get<corpus::Chunk>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string(kChunksFile) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return chunks;
}

HnswIndex load(const fs::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / kMetaFile));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(kMetaFile) + ": " + e.what());
  }

  std::size_t dim = 0;
  std::size_t count = 0;
  HnswParams params;
  std::optional<HnswIndex::NodeId> entry;
  std::uint64_t level_draws = 0;
  try {
    const int version = meta.at("format_version").get<int>();
    if (version != kFormatVersion) throw VersionMismatch(kFormatVersion, version);
    dim = meta.at("dim").get<std::size_t>();
    count = meta.at("count").get<std::size_t>();
    const auto& p = meta.at("params");
    params.m = p.at("m").get<std::size_t>();
    params.m0 = p.at("m0").get<std::size_t>();
    params.ef_construction = p.at("ef_construction").get<std::size_t>();
    params.ef_search = p.at("ef_search").get<std::size_t>();
    params.ml = p.at("ml").get<double>();
    params.seed = p.at("seed").get<std::uint64_t>();
    if (!meta.at("entry_point").is_null()) entry = meta.at("entry_point").get<HnswIndex::NodeId>();
    level_draws = meta.value("level_draws", std::uint64_t{count});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(kMetaFile) + ": " + e.what());
  }
  if (dim == 0) throw FormatError("dim must be positive");
  try {
    params.validate();
  } catch (const InvalidParams& e) {
    throw FormatError(std::string("params: ") + e.what());
  }

  const std::string vec_bytes = read_file(dir / kVectorsFile);
  Reader vr(vec_bytes, kVectorsFile);
  vr.expect_magic(kVectorMagic);
  if ((vec_bytes.size() - 8) != count * dim * 4) vr.fail("size does not match count x dim");
  std::vector<float> vectors(count * dim);
  for (auto& f : vectors) f = std::bit_cast<float>(vr.u32());
  vr.expect_end();

  const std::string graph_bytes = read_file(dir / kGraphFile);
  Reader gr(graph_bytes, kGraphFile);
  gr.expect_magic(kGraphMagic);
  std::vector<std::vector<std::vector<HnswIndex::NodeId>>> links(count);
  for (auto& node_links : links) {
    const int level = gr.u8();
    node_links.resize(static_cast<std::size_t>(level) + 1);
    for (auto& layer : node_links) {
      const std::uint16_t degree = gr.u16();
      layer.resize(degree);
      for (auto& nb : layer) nb = gr.u32();
    }
  }
  gr.expect_end();

  std::vector<std::string> ids;
  ids.reserve(count);
  for (auto& c : load_chunks(dir)) ids.push_back(std::move(c.chunk_id));
  if (ids.size() != count) throw FormatError("chunks.jsonl has " + std::to_string(ids.size()) + " records, expected " +
                                             std::to_string(count));

  return HnswIndex::from_parts(dim, params, std::move(ids), std::move(vectors), std::move(links), entry,
                               level_draws);
}

HnswIndex load(const fs::path& dir, std::size_t expected_dim) {
  HnswIndex index = load(dir);
  if (index.dim() != expected_dim) throw DimMismatch(expected_dim, index.dim());
  return index;
}

}  // namespace telecomrag::vindex
