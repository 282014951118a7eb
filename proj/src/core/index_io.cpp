#include "dprag/index_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "dprag/error.hpp"

namespace dprag {

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorCode::kFormat, "truncated index header");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

void write_index(std::ostream& out, const Index& index) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& [pu, doc] : index.corpus.documents()) {
    docs.push_back({{"doc_id", doc.doc_id},
                    {"privacy_unit", doc.privacy_unit},
                    {"text", doc.text},
                    {"embedding", doc.embedding}});
  }
  nlohmann::json embedder = {{"kind", index.embedder.kind}};
  if (index.embedder.kind == "toy-hash") embedder["seed"] = index.embedder.seed;
  if (!index.embedder.url.empty()) embedder["url"] = index.embedder.url;

  const nlohmann::json payload = {
      {"format", "dprag-index"},
      {"version", kIndexVersion},
      {"embedder", std::move(embedder)},
      {"embedding_dim", index.corpus.embedding_dim()},
      {"documents", std::move(docs)}};
  const std::string body = payload.dump();

  out.write(kIndexMagic, sizeof(kIndexMagic));
  put_le<std::uint32_t>(out, kIndexVersion);
  put_le<std::uint64_t>(out, body.size());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw Error(ErrorCode::kIo, "index write failed");
}

Index read_index(std::istream& in) {
  char magic[sizeof(kIndexMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::kFormat, "not a DPRAGIDX index file");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kIndexVersion) {
    throw Error(ErrorCode::kFormat,
                "unsupported index version " + std::to_string(version));
  }
  const auto length = get_le<std::uint64_t>(in);
  std::string body(length, '\0');
  in.read(body.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(in.gcount()) != length) {
    throw Error(ErrorCode::kFormat, "truncated index payload");
  }

  Index index;
  try {
    const auto payload = nlohmann::json::parse(body);
    const auto& embedder = payload.at("embedder");
    index.embedder.kind = embedder.at("kind").get<std::string>();
    index.embedder.seed = embedder.value("seed", std::uint64_t{0});
    index.embedder.url = embedder.value("url", std::string{});
    for (const auto& d : payload.at("documents")) {
      Document doc;
      doc.doc_id = d.at("doc_id").get<std::string>();
      doc.privacy_unit = d.at("privacy_unit").get<std::string>();
      doc.text = d.at("text").get<std::string>();
      doc.embedding = d.at("embedding").get<std::vector<double>>();
      index.corpus.insert(std::move(doc));
    }
    const auto dim = payload.at("embedding_dim").get<std::size_t>();
    if (dim != index.corpus.embedding_dim()) {
      throw Error(ErrorCode::kFormat, "embedding_dim disagrees with documents");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("index payload: ") + e.what());
  }
  return index;
}

void save_index(const std::filesystem::path& path, const Index& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_index(out, index);
}

Index load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return read_index(in);
}

}  // namespace dprag
