// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentiment/errors.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/text_pipeline.hpp"

namespace sentiment {

struct PretrainedVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
};

// word2vec text format: a "count dim" header line, then "token v1 ... vd".
inline PretrainedVectors load_word2vec_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  PretrainedVectors out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  auto fields_of = [](std::string_view s) {
    std::vector<std::string_view> f;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
      if (j > i) f.push_back(s.substr(i, j - i));
      i = j;
    }
    return f;
  };
  auto number = [&](std::string_view s, auto& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw DataError(path, line_no, "bad number '" + std::string(s) + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = fields_of(line);
    if (f.empty()) continue;
    if (out.dim == 0) {
      if (f.size() != 2) throw DataError(path, line_no, "expected header 'count dim'");
      number(f[0], declared);
      number(f[1], out.dim);
      if (out.dim == 0) throw DataError(path, line_no, "dimension must be positive");
      continue;
    }
    if (f.size() != out.dim + 1) {
      throw DataError(path, line_no,
                      "expected token and " + std::to_string(out.dim) + " values");
    }
    std::vector<double> v(out.dim);
    for (std::size_t i = 0; i < out.dim; ++i) number(f[i + 1], v[i]);
    out.vectors.insert_or_assign(std::string(f[0]), std::move(v));
  }
  if (out.dim == 0) throw DataError(path, 0, "empty embeddings file");
  if (out.vectors.size() > declared) {
    throw DataError(path, 0, "more vectors than the header declares");
  }
  return out;
}

// Overwrites rows of tokens present in `pretrained`; other rows keep their
// initialization and PAD stays zero. Returns the number of rows replaced.
inline std::size_t apply_pretrained(EmbeddingParams& emb, const Vocabulary& vocab,
                                    const PretrainedVectors& pretrained) {
  if (pretrained.dim != emb.dim()) {
    throw ConfigError("embedding_dim", "pretrained vectors have dimension " +
                                           std::to_string(pretrained.dim) + ", model uses " +
                                           std::to_string(emb.dim()));
  }
  std::size_t replaced = 0;
  for (std::size_t idx = 2; idx < vocab.size(); ++idx) {
    auto it = pretrained.vectors.find(vocab.token_at(idx));
    if (it == pretrained.vectors.end()) continue;
    auto row = emb.table.row(idx);
    std::copy(it->second.begin(), it->second.end(), row.begin());
    ++replaced;
  }
  return replaced;
}

}  // namespace sentiment
