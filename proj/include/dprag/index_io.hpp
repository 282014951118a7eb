#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "dprag/core.hpp"

namespace dprag {

// Index file layout:
//   bytes 0..7   magic "DPRAGIDX"
//   bytes 8..11  format version, uint32 little-endian
//   bytes 12..19 payload length, uint64 little-endian
//   payload      UTF-8 JSON object:
//     {"format":"dprag-index","version":1,"embedder":{...},
//      "embedding_dim":d,"documents":[{"doc_id","privacy_unit","text",
//      "embedding":[...]}]}
// Doubles are written with round-trip precision.
inline constexpr char kIndexMagic[8] = {'D', 'P', 'R', 'A', 'G', 'I', 'D', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

// How the stored embeddings were produced, so queries embed with the same
// provider.
struct EmbedderInfo {
  std::string kind = "toy-hash";  // "toy-hash" or "remote"
  std::uint64_t seed = 0;         // toy-hash only
  std::string url;                // remote only

  bool operator==(const EmbedderInfo&) const = default;
};

struct Index {
  Corpus corpus;
  EmbedderInfo embedder;
};

void write_index(std::ostream& out, const Index& index);
Index read_index(std::istream& in);

void save_index(const std::filesystem::path& path, const Index& index);
Index load_index(const std::filesystem::path& path);

}  // namespace dprag
