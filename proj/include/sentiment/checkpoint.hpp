// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Checkpoint container, format version 1:
//
//   sentiment-checkpoint\n
//   format_version 1\n
//   stack <variant>\n
//   config <n>\n        then n lines key=value
//   vocab <n>\n         then n lines, content tokens for indices 2..
//   stopwords <n>\n     then n lines (sorted)
//   whitelist <n>\n     then n lines (sorted)
//   tensors <n>\n
//   per tensor:  tensor <name> <rows> <cols>\n
//                rows*cols float64 little-endian, row-major
//                crc32 of those bytes, uint32 little-endian
//                \n
//   checksum <crc32 of every preceding byte, uint32 little-endian>
//
// Tokens never contain whitespace (cleaning splits on it), so the listings
// are line-safe.
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <zlib.h>

#include "sentiment/errors.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/text_pipeline.hpp"
#include "sentiment/training.hpp"

namespace sentiment {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "sentiment-checkpoint";

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  Vocabulary vocab;
  TokenSet stopwords;
  TokenSet whitelist;
};

namespace detail {

inline std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + offset), static_cast<uInt>(n));
    offset += n;
  }
  return static_cast<std::uint32_t>(crc);
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64_le(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32_le(std::string_view in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

inline double get_f64_le(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return std::bit_cast<double>(v);
}

inline std::vector<std::string> sorted(const TokenSet& set) {
  std::vector<std::string> out(set.begin(), set.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Sequential reader over the checkpoint body.
class CheckpointReader {
 public:
  explicit CheckpointReader(std::string_view body) : body_(body) {}

  std::string_view line() {
    const auto end = body_.find('\n', pos_);
    if (end == std::string_view::npos) throw CheckpointError("checkpoint: truncated header");
    auto out = body_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

  // "<keyword> <value>" -> value
  std::string_view field(std::string_view keyword) {
    auto l = line();
    if (l.size() <= keyword.size() || l.substr(0, keyword.size()) != keyword ||
        l[keyword.size()] != ' ') {
      throw CheckpointError("checkpoint: expected '" + std::string(keyword) + "'");
    }
    return l.substr(keyword.size() + 1);
  }

  std::size_t count(std::string_view keyword) {
    auto v = field(keyword);
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw CheckpointError("checkpoint: bad count for '" + std::string(keyword) + "'");
    }
    return n;
  }

  std::string_view bytes(std::size_t n) {
    if (body_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated tensor data");
    auto out = body_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool at_end() const noexcept { return pos_ == body_.size(); }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out += kCheckpointMagic;
  out += "\nformat_version " + std::to_string(kCheckpointVersion) + "\n";
  out += "stack " + std::string(to_string(ckpt.params.stack)) + "\n";
  const auto kv = ckpt.config.to_key_values();
  out += "config " + std::to_string(kv.size()) + "\n";
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  const auto content = ckpt.vocab.content_tokens();
  out += "vocab " + std::to_string(content.size()) + "\n";
  for (const auto& t : content) out += t + "\n";
  for (auto [name, set] : {std::pair{"stopwords", &ckpt.stopwords}, std::pair{"whitelist", &ckpt.whitelist}}) {
    const auto list = detail::sorted(*set);
    out += std::string(name) + " " + std::to_string(list.size()) + "\n";
    for (const auto& t : list) out += t + "\n";
  }
  const auto tensors = ckpt.params.tensors();
  out += "tensors " + std::to_string(tensors.size()) + "\n";
  for (const auto& t : tensors) {
    out += "tensor " + t.name + " " + std::to_string(t.rows) + " " + std::to_string(t.cols) + "\n";
    std::string payload;
    payload.reserve(t.values.size() * 8);
    for (double v : t.values) detail::put_f64_le(payload, v);
    out += payload;
    detail::put_u32_le(out, detail::crc32_of(payload));
    out += "\n";
  }
  out += "checksum ";
  detail::put_u32_le(out, detail::crc32_of(out));
  return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view data) {
  constexpr std::string_view kTrailer = "checksum ";
  if (data.size() < kTrailer.size() + 4 ||
      data.substr(data.size() - 4 - kTrailer.size(), kTrailer.size()) != kTrailer) {
    throw CheckpointError("checkpoint: checksum trailer missing (file truncated?)");
  }
  const auto body_with_tag = data.substr(0, data.size() - 4);
  if (detail::crc32_of(body_with_tag) != detail::get_u32_le(data.substr(data.size() - 4))) {
    throw CheckpointError("checkpoint: file checksum mismatch");
  }
  detail::CheckpointReader in(data.substr(0, data.size() - 4 - kTrailer.size()));

  if (in.line() != kCheckpointMagic) throw CheckpointError("checkpoint: not a checkpoint file");
  const auto version = in.field("format_version");
  if (version != std::to_string(kCheckpointVersion)) {
    throw CheckpointError("checkpoint: unsupported format_version " + std::string(version));
  }
  Checkpoint ckpt;
  StackVariant stack;
  try {
    stack = parse_stack_variant(in.field("stack"));
  } catch (const ConfigError&) {
    throw CheckpointError("checkpoint: unknown stack variant");
  }

  const std::size_t n_config = in.count("config");
  for (std::size_t i = 0; i < n_config; ++i) {
    auto l = in.line();
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw CheckpointError("checkpoint: malformed config line");
    try {
      ckpt.config.set(l.substr(0, eq), l.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint: config ") + e.what());
    }
  }
  if (ckpt.config.stack != stack) throw CheckpointError("checkpoint: stack disagrees with config");

  std::vector<std::string> content(in.count("vocab"));
  for (auto& t : content) t = std::string(in.line());
  try {
    ckpt.vocab = Vocabulary::from_tokens(content);
  } catch (const DataError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  for (auto [name, set] : {std::pair{"stopwords", &ckpt.stopwords}, std::pair{"whitelist", &ckpt.whitelist}}) {
    const std::size_t n = in.count(name);
    for (std::size_t i = 0; i < n; ++i) set->emplace(in.line());
  }

  ckpt.params = ModelParams::zeros(stack, ckpt.config.dims(ckpt.vocab.size()));
  auto tensors = ckpt.params.tensors();
  if (in.count("tensors") != tensors.size()) {
    throw ModelMismatchError("checkpoint: tensor count does not match stack " +
                             std::string(to_string(stack)));
  }
  for (auto& t : tensors) {
    const std::string expected =
        t.name + " " + std::to_string(t.rows) + " " + std::to_string(t.cols);
    if (in.field("tensor") != expected) {
      throw ModelMismatchError("checkpoint: expected tensor '" + expected + "'");
    }
    const auto payload = in.bytes(t.values.size() * 8);
    if (detail::crc32_of(payload) != detail::get_u32_le(in.bytes(4))) {
      throw CheckpointError("checkpoint: checksum mismatch in tensor " + t.name);
    }
    for (std::size_t j = 0; j < t.values.size(); ++j) {
      t.values[j] = detail::get_f64_le(payload.substr(8 * j, 8));
    }
    if (in.bytes(1) != "\n") throw CheckpointError("checkpoint: malformed tensor record");
  }
  if (!in.at_end()) throw CheckpointError("checkpoint: trailing data");
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace sentiment
