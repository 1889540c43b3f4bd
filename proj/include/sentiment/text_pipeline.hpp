// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Corpus ingestion and the preprocessing chain that turns raw reviews into
// fixed-length index sequences: cleaning (lowercase, punctuation strip,
// stopword removal that spares negations and boosters, suffix stemming),
// vocabulary construction, encoding, class balancing and stratified split.
//
// Every function is pure given its inputs and explicit seed.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentiment/errors.hpp"
#include "sentiment/random.hpp"
#include "sentiment/stopwords.hpp"

namespace sentiment {

using TokenSet = std::unordered_set<std::string>;

struct Review {
  std::string text;
  int label = 0;  // 0 negative, 1 positive

  bool operator==(const Review&) const = default;
};

class LabeledCorpus {
 public:
  LabeledCorpus() = default;
  explicit LabeledCorpus(std::vector<Review> reviews) {
    reviews_.reserve(reviews.size());
    for (auto& r : reviews) add(std::move(r));
  }

  void add(Review review) {
    if (review.label != 0 && review.label != 1) {
      throw DataError("", 0, "label must be 0 or 1, got " + std::to_string(review.label));
    }
    (review.label == 1 ? positive_ : negative_) += 1;
    reviews_.push_back(std::move(review));
  }

  const std::vector<Review>& reviews() const noexcept { return reviews_; }
  const Review& operator[](std::size_t i) const noexcept { return reviews_[i]; }
  std::size_t size() const noexcept { return reviews_.size(); }
  bool empty() const noexcept { return reviews_.empty(); }
  std::size_t positive_count() const noexcept { return positive_; }
  std::size_t negative_count() const noexcept { return negative_; }
  std::size_t count(int label) const noexcept { return label == 1 ? positive_ : negative_; }

  // Recounts from the reviews and compares with the stored tallies.
  bool counts_consistent() const noexcept {
    std::size_t pos = 0;
    for (const auto& r : reviews_) pos += r.label == 1 ? 1 : 0;
    return pos == positive_ && reviews_.size() - pos == negative_;
  }

  bool operator==(const LabeledCorpus&) const = default;

 private:
  std::vector<Review> reviews_;
  std::size_t positive_ = 0;
  std::size_t negative_ = 0;
};

// ---------------------------------------------------------------------------
// Loading

enum class DatasetFormat { csv, jsonl };

inline DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::csv;
  if (name == "jsonl") return DatasetFormat::jsonl;
  throw ConfigError("format", "expected csv or jsonl, got '" + std::string(name) + "'");
}

// Guess from the extension; anything other than .jsonl/.json is CSV.
inline DatasetFormat dataset_format_for(const std::string& path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".jsonl") || ends_with(".json") ? DatasetFormat::jsonl : DatasetFormat::csv;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line the record starts on
};

// RFC 4180: comma separated, fields optionally double-quoted, "" escapes a
// quote inside a quoted field, quoted fields may span lines. CRLF or LF.
inline std::vector<CsvRecord> parse_csv(const std::string& text, const std::string& path) {
  std::vector<CsvRecord> records;
  std::size_t i = 0;
  std::size_t line = 1;
  if (text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  const std::size_t n = text.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool record_done = false;
    bool blank = true;
    while (!record_done) {
      field.clear();
      if (i < n && text[i] == '"') {
        blank = false;
        const std::size_t open_line = line;
        ++i;
        for (;;) {
          if (i >= n) throw DataError(path, open_line, "unterminated quoted field");
          char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          throw DataError(path, line, "unexpected character after closing quote");
        }
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"') throw DataError(path, line, "stray quote in unquoted field");
          field.push_back(text[i++]);
        }
        if (!field.empty()) blank = false;
      }
      rec.fields.push_back(field);
      if (i < n && text[i] == ',') {
        blank = false;
        ++i;
        continue;
      }
      if (i < n && text[i] == '\r') ++i;
      if (i < n && text[i] == '\n') {
        ++i;
        ++line;
      }
      record_done = true;
    }
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

inline int parse_label(std::string_view raw, const std::string& path, std::size_t line) {
  auto s = trim(raw);
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw DataError(path, line, "label must be 0 or 1, got '" + std::string(s) + "'");
}

inline LabeledCorpus load_csv(const std::string& path) {
  const auto records = parse_csv(read_file(path), path);
  if (records.empty()) throw DataError(path, 0, "empty corpus (no header)");
  const auto& header = records.front();
  std::optional<std::size_t> text_col, label_col;
  for (std::size_t c = 0; c < header.fields.size(); ++c) {
    auto name = trim(header.fields[c]);
    if (name == "text") text_col = c;
    if (name == "label") label_col = c;
  }
  if (!text_col || !label_col) {
    throw DataError(path, header.line, "header must name columns 'text' and 'label'");
  }
  LabeledCorpus corpus;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.fields.size()) {
      throw DataError(path, rec.line,
                      "expected " + std::to_string(header.fields.size()) + " fields, got " +
                          std::to_string(rec.fields.size()));
    }
    const std::string& text = rec.fields[*text_col];
    if (trim(text).empty()) throw DataError(path, rec.line, "missing text");
    corpus.add({text, parse_label(rec.fields[*label_col], path, rec.line)});
  }
  return corpus;
}

inline LabeledCorpus load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  LabeledCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!row.is_object()) throw DataError(path, line_no, "expected a JSON object");
    auto text = row.find("text");
    if (text == row.end() || !text->is_string() || trim(text->get_ref<const std::string&>()).empty()) {
      throw DataError(path, line_no, "missing text");
    }
    auto label = row.find("label");
    if (label == row.end() || !label->is_number_integer()) {
      throw DataError(path, line_no, "label must be the integer 0 or 1");
    }
    const auto value = label->get<std::int64_t>();
    if (value != 0 && value != 1) {
      throw DataError(path, line_no, "label must be 0 or 1, got " + std::to_string(value));
    }
    corpus.add({text->get<std::string>(), static_cast<int>(value)});
  }
  return corpus;
}

}  // namespace detail

inline LabeledCorpus load_dataset(const std::string& path, DatasetFormat format) {
  LabeledCorpus corpus =
      format == DatasetFormat::csv ? detail::load_csv(path) : detail::load_jsonl(path);
  if (corpus.empty()) throw DataError(path, 0, "empty corpus");
  return corpus;
}

// One token per line; blank lines and surrounding whitespace ignored.
inline TokenSet read_token_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  TokenSet tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = detail::trim(line);
    if (tok.empty()) continue;
    if (tok.find_first_of(" \t") != std::string_view::npos) {
      throw DataError(path, line_no, "expected one token per line");
    }
    tokens.emplace(tok);
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Cleaning

// Rule-based suffix stemmer. Strips the first of "ing", "ed", "ly", "es",
// "s" that leaves a stem of at least 3 bytes ("s" is never stripped from
// "ss"). After "ing"/"ed", a doubled final consonant other than l/s/z is
// undoubled (running -> runn -> run). Applied until nothing changes, so
// stem(stem(w)) == stem(w).
inline std::string stem(std::string word) {
  static constexpr std::string_view kSuffixes[] = {"ing", "ed", "ly", "es", "s"};
  constexpr std::size_t kMinStem = 3;
  auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::string_view suffix : kSuffixes) {
      if (word.size() < suffix.size() + kMinStem) continue;
      if (word.compare(word.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
      if (suffix == "s" && word[word.size() - 2] == 's') continue;
      word.resize(word.size() - suffix.size());
      if (suffix == "ing" || suffix == "ed") {
        const std::size_t n = word.size();
        const char last = word[n - 1];
        if (n - 1 >= kMinStem && last == word[n - 2] &&
            std::isalpha(static_cast<unsigned char>(last)) && !is_vowel(last) &&
            last != 'l' && last != 's' && last != 'z') {
          word.pop_back();
        }
      }
      changed = true;
      break;
    }
  }
  return word;
}

inline std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

// Lowercase, expand the "n't" contraction to " not", replace every ASCII
// character that is not a letter or digit with a space (bytes >= 0x80 are
// kept as token characters), drop stopwords unless whitelisted, stem the
// rest (whitelisted tokens are kept verbatim), join with single spaces.
inline std::string clean_text(std::string_view raw, const TokenSet& stopwords,
                              const TokenSet& whitelist) {
  std::string lowered;
  lowered.reserve(raw.size() + 8);
  for (char c : raw) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  std::string spaced;
  spaced.reserve(lowered.size() + 8);
  for (std::size_t i = 0; i < lowered.size();) {
    if (lowered.compare(i, 3, "n't") == 0) {
      spaced += " not ";
      i += 3;
    } else if (lowered.compare(i, 5, "n\xE2\x80\x99t") == 0) {  // n’t
      spaced += " not ";
      i += 5;
    } else {
      const auto c = static_cast<unsigned char>(lowered[i]);
      spaced.push_back(c >= 0x80 || std::isalnum(c) ? static_cast<char>(c) : ' ');
      ++i;
    }
  }

  std::string out;
  for (auto& token : split_tokens(spaced)) {
    if (!whitelist.contains(token)) {
      if (stopwords.contains(token)) continue;
      token = stem(std::move(token));
      if (stopwords.contains(token) && !whitelist.contains(token)) continue;
    }
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

inline LabeledCorpus clean_corpus(const LabeledCorpus& corpus, const TokenSet& stopwords,
                                  const TokenSet& whitelist) {
  LabeledCorpus out;
  for (const auto& r : corpus.reviews()) out.add({clean_text(r.text, stopwords, whitelist), r.label});
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary and encoding

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() : tokens_{std::string(kPadToken), std::string(kUnkToken)} {
    index_.emplace(tokens_[0], kPad);
    index_.emplace(tokens_[1], kUnk);
  }

  // Content tokens receive indices 2, 3, ... in the order given.
  static Vocabulary from_tokens(const std::vector<std::string>& content) {
    Vocabulary v;
    for (const auto& tok : content) {
      if (tok.empty() || !v.index_.emplace(tok, v.tokens_.size()).second) {
        throw DataError("", 0, "vocabulary: duplicate or empty token '" + tok + "'");
      }
      v.tokens_.push_back(tok);
    }
    return v;
  }

  std::size_t size() const noexcept { return tokens_.size(); }

  std::optional<std::size_t> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view token) const { return find(token).value_or(kUnk); }

  const std::string& token_at(std::size_t index) const { return tokens_.at(index); }

  // index -> token over [0, size)
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<std::string> content_tokens() const {
    return {tokens_.begin() + 2, tokens_.end()};
  }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
};

// Tokens ranked by descending frequency, ties lexicographic; the top
// (max_size - 2) with frequency >= min_freq get indices 2, 3, ...
inline Vocabulary build_vocabulary(const LabeledCorpus& corpus, std::size_t max_size,
                                   std::size_t min_freq) {
  if (corpus.empty()) throw DataError("", 0, "build_vocabulary: empty corpus");
  if (max_size < 3) throw ConfigError("vocab_size", "must be at least 3");
  if (min_freq < 1) throw ConfigError("min_freq", "must be at least 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& r : corpus.reviews()) {
    for (auto& tok : split_tokens(r.text)) ++freq[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size - 2) ranked.resize(max_size - 2);
  std::vector<std::string> content;
  content.reserve(ranked.size());
  for (auto& [tok, n] : ranked) content.push_back(std::move(tok));
  return Vocabulary::from_tokens(content);
}

struct TokenSequence {
  std::vector<std::size_t> indices;  // length max_len, PAD after true_length
  std::size_t true_length = 0;

  bool operator==(const TokenSequence&) const = default;
};

// Long texts keep their last max_len tokens; short ones are post-padded.
inline TokenSequence encode_sequence(std::string_view text, const Vocabulary& vocab,
                                     std::size_t max_len) {
  if (max_len < 1) throw ConfigError("max_len", "must be at least 1");
  const auto tokens = split_tokens(text);
  const std::size_t start = tokens.size() > max_len ? tokens.size() - max_len : 0;
  TokenSequence seq;
  seq.indices.assign(max_len, Vocabulary::kPad);
  for (std::size_t i = start; i < tokens.size(); ++i) {
    seq.indices[i - start] = vocab.index_of(tokens[i]);
  }
  seq.true_length = tokens.size() - start;
  return seq;
}

inline std::string decode_sequence(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += vocab.token_at(seq.indices[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Balancing and splitting

// Undersamples the majority class to the minority count. Survivors are
// chosen uniformly at random from the seed and keep their original order.
inline LabeledCorpus balance_classes(const LabeledCorpus& corpus, std::uint64_t seed) {
  if (corpus.positive_count() == 0 || corpus.negative_count() == 0) {
    throw DataError("", 0, "balance_classes: a class is empty");
  }
  if (corpus.positive_count() == corpus.negative_count()) return corpus;
  const int majority = corpus.positive_count() > corpus.negative_count() ? 1 : 0;
  const std::size_t target = corpus.count(1 - majority);

  std::vector<std::size_t> majority_rows;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].label == majority) majority_rows.push_back(i);
  }
  Rng rng(mix_seed(seed, 0xBA1A));
  for (std::size_t i = 0; i < target; ++i) {  // partial Fisher-Yates
    std::size_t j = i + static_cast<std::size_t>(rng.index(majority_rows.size() - i));
    std::swap(majority_rows[i], majority_rows[j]);
  }
  std::vector<bool> keep(corpus.size(), true);
  for (std::size_t i = target; i < majority_rows.size(); ++i) keep[majority_rows[i]] = false;

  LabeledCorpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep[i]) out.add(corpus[i]);
  }
  return out;
}

struct CorpusSplit {
  LabeledCorpus train;
  LabeledCorpus test;
};

// Per-class seeded shuffle, then round(n_c * test_fraction) of each class
// goes to test. Both sides keep the corpus's relative order.
inline CorpusSplit stratified_split(const LabeledCorpus& corpus, double test_fraction,
                                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction", "must lie strictly between 0 and 1");
  }
  std::vector<bool> to_test(corpus.size(), false);
  for (int label : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].label == label) rows.push_back(i);
    }
    const auto n_test =
        static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    if (rows.size() < 2 || n_test == 0 || n_test == rows.size()) {
      throw DataError("", 0,
                      "stratified_split: class " + std::to_string(label) + " has " +
                          std::to_string(rows.size()) +
                          " members, too few to place one on each side");
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(rows);
    for (std::size_t i = 0; i < n_test; ++i) to_test[rows[i]] = true;
  }
  CorpusSplit split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (to_test[i] ? split.test : split.train).add(corpus[i]);
  }
  return split;
}

}  // namespace sentiment
