// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles/corpora.hpp"
#include "sentiment/text_pipeline.hpp"

namespace sentiment {
namespace {

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() /
                    ("sentiment_text_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                     "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }

  std::string write(const std::string& name, const std::string& contents) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << contents;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

LabeledCorpus corpus_of(std::size_t positives, std::size_t negatives) {
  LabeledCorpus c;
  for (std::size_t i = 0; i < positives; ++i) c.add({"p" + std::to_string(i), 1});
  for (std::size_t i = 0; i < negatives; ++i) c.add({"n" + std::to_string(i), 0});
  return c;
}

// ---------------------------------------------------------------------------
// load_dataset

TEST(LoadDataset, CsvReadBack) {
  TempDir dir;
  const auto path = dir.write("a.csv", "text,label\ngreat movie,1\nawful,0\n");
  const auto c = load_dataset(path, DatasetFormat::csv);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.positive_count(), 1u);
  EXPECT_EQ(c.negative_count(), 1u);
  EXPECT_EQ(c[0], (Review{"great movie", 1}));
}

TEST(LoadDataset, CsvQuotingAndMultilineFields) {
  TempDir dir;
  const auto path =
      dir.write("q.csv", "text,label\r\n\"said \"\"no\"\", then left\",0\r\n\"two\nlines\",1\r\nlast,1");
  const auto c = load_dataset(path, DatasetFormat::csv);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].text, "said \"no\", then left");
  EXPECT_EQ(c[1].text, "two\nlines");
  EXPECT_EQ(c[2].label, 1);
}

TEST(LoadDataset, BadLabelNamesLine) {
  TempDir dir;
  const auto path = dir.write("bad.csv", "text,label\nfine,1\nbroken,2\n");
  try {
    load_dataset(path, DatasetFormat::csv);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, LineNumbersCountEmbeddedNewlines) {
  TempDir dir;
  const auto path = dir.write("nl.csv", "text,label\n\"a\nb\",1\n,0\n");
  try {
    load_dataset(path, DatasetFormat::csv);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(LoadDataset, Errors) {
  TempDir dir;
  EXPECT_THROW(load_dataset("/nonexistent/file.csv", DatasetFormat::csv), DataError);
  EXPECT_THROW(load_dataset(dir.write("h.csv", "text,label\n"), DatasetFormat::csv), DataError);
  EXPECT_THROW(load_dataset(dir.write("n.csv", "body,score\nx,1\n"), DatasetFormat::csv), DataError);
  EXPECT_THROW(load_dataset(dir.write("f.csv", "text,label\nx,1,extra\n"), DatasetFormat::csv), DataError);
}

TEST(LoadDataset, Jsonl) {
  TempDir dir;
  const auto path = dir.write("a.jsonl",
                              "{\"text\": \"good\", \"label\": 1}\n\n{\"text\": \"bad\", \"label\": 0}\n");
  const auto c = load_dataset(path, DatasetFormat::jsonl);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1], (Review{"bad", 0}));

  try {
    load_dataset(dir.write("b.jsonl", "{\"text\": \"good\", \"label\": 1}\n{\"text\": \"x\", \"label\": \"1\"}\n"),
                 DatasetFormat::jsonl);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_dataset(dir.write("c.jsonl", "{\"label\": 1}\n"), DatasetFormat::jsonl), DataError);
  EXPECT_THROW(load_dataset(dir.write("d.jsonl", "not json\n"), DatasetFormat::jsonl), DataError);
}

TEST(LoadDataset, FullCorpusCounts) {
  TempDir dir;
  std::string csv = "text,label\n";
  for (int i = 0; i < 28230; ++i) csv += "pos review,1\n";
  for (int i = 0; i < 27397; ++i) csv += "neg review,0\n";
  const auto c = load_dataset(dir.write("merged.csv", csv), DatasetFormat::csv);
  EXPECT_EQ(c.positive_count(), 28230u);
  EXPECT_EQ(c.negative_count(), 27397u);
  EXPECT_TRUE(c.counts_consistent());
}

TEST(LabeledCorpus, RejectsBadLabel) {
  LabeledCorpus c;
  EXPECT_THROW(c.add({"x", 2}), DataError);
  EXPECT_TRUE(c.empty());
}

// ---------------------------------------------------------------------------
// clean_text

TEST(CleanText, WhitelistSurvivesStopwording) {
  const TokenSet stop = {"this", "was", "not", "very"};
  const TokenSet keep = {"not", "very"};
  // "movie" is neither a stopword nor stemmed away.
  EXPECT_EQ(clean_text("This movie was NOT very good!!!", stop, keep), "movie not very good");
  TokenSet stop_movie = stop;
  stop_movie.insert("movie");
  EXPECT_EQ(clean_text("This movie was NOT very good!!!", stop_movie, keep), "not very good");
}

TEST(CleanText, Empty) { EXPECT_EQ(clean_text("", {}, {}), ""); }

TEST(CleanText, StemmerRules) {
  // running -ing-> runn -undouble-> run; runs -s-> run; runner has no rule.
  EXPECT_EQ(clean_text("Running runs runner", {}, {}), "run run runner");
  EXPECT_EQ(stem("boxes"), "box");
  EXPECT_EQ(stem("falling"), "fall");   // l is not undoubled
  EXPECT_EQ(stem("class"), "class");    // no s off "ss"
  EXPECT_EQ(stem("sing"), "sing");      // stem would be 1 byte
  EXPECT_EQ(stem("quickly"), "quick");
  EXPECT_EQ(stem("settings"), "set");   // settings -> setting -> set
}

TEST(CleanText, ContractionNegation) {
  EXPECT_EQ(clean_text("I didn't like it", default_stopwords(), default_whitelist()), "not like");
}

TEST(CleanText, Idempotent) {
  const auto corpus = oracle::keyword_corpus(50, 3);
  const std::vector<std::string> extra = {
      "The settings aren't great, REALLY!!", "<br />Boxes of running runners...", "so so, too slow",
      "Nobody's perfect -- 10/10 would watch again", "caf\xC3\xA9 visits were extremely nice"};
  const auto& stop = default_stopwords();
  const auto& keep = default_whitelist();
  auto check = [&](const std::string& s) {
    const auto once = clean_text(s, stop, keep);
    EXPECT_EQ(clean_text(once, stop, keep), once) << s;
  };
  for (const auto& r : corpus.reviews()) check(r.text);
  for (const auto& s : extra) check(s);
}

TEST(ReadTokenFile, OneTokenPerLine) {
  TempDir dir;
  const auto set = read_token_file(dir.write("s.txt", "the\n  a \n\nnot\n"));
  EXPECT_EQ(set, (TokenSet{"the", "a", "not"}));
  EXPECT_THROW(read_token_file(dir.write("bad.txt", "two words\n")), DataError);
}

// ---------------------------------------------------------------------------
// build_vocabulary / encode_sequence

TEST(BuildVocabulary, FrequencyOrder) {
  const LabeledCorpus c({{"a a b", 1}});
  const auto v = build_vocabulary(c, 10, 1);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token_at(0), "<pad>");
  EXPECT_EQ(v.token_at(1), "<unk>");
  EXPECT_EQ(v.index_of("a"), 2u);
  EXPECT_EQ(v.index_of("b"), 3u);
}

TEST(BuildVocabulary, MinFrequency) {
  const auto v = build_vocabulary(LabeledCorpus({{"a a b", 1}}), 10, 2);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.index_of("a"), 2u);
  EXPECT_EQ(v.index_of("b"), Vocabulary::kUnk);
}

TEST(BuildVocabulary, TieBreakIsLexicographic) {
  const auto v = build_vocabulary(LabeledCorpus({{"y x", 0}}), 3, 1);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v.token_at(2), "x");
}

TEST(BuildVocabulary, Errors) {
  EXPECT_THROW(build_vocabulary(LabeledCorpus{}, 10, 1), DataError);
  EXPECT_THROW(build_vocabulary(LabeledCorpus({{"a", 1}}), 2, 1), ConfigError);
}

TEST(Vocabulary, MutualInverse) {
  const auto v = build_vocabulary(oracle::keyword_corpus(40, 9), 100, 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v.index_of(v.token_at(i)), i);
  }
}

TEST(EncodeSequence, PadsAndMapsUnknown) {
  const auto v = Vocabulary::from_tokens({"a", "b"});
  const auto s = encode_sequence("a b", v, 4);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{2, 3, 0, 0}));
  EXPECT_EQ(s.true_length, 2u);
  EXPECT_EQ(encode_sequence("a z", v, 4).indices, (std::vector<std::size_t>{2, 1, 0, 0}));
}

TEST(EncodeSequence, KeepsTail) {
  const auto v = Vocabulary::from_tokens({"t1", "t2", "t3", "t4", "t5"});
  const auto s = encode_sequence("t1 t2 t3 t4 t5", v, 3);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{4, 5, 6}));
  EXPECT_EQ(s.true_length, 3u);
}

TEST(EncodeSequence, RoundTripOverVocabulary) {
  const auto corpus = oracle::keyword_corpus(60, 5);
  const auto v = build_vocabulary(corpus, 1000, 1);
  for (const auto& r : corpus.reviews()) {
    for (std::size_t max_len : {1u, 3u, 8u, 20u}) {
      const auto seq = encode_sequence(r.text, v, max_len);
      const auto tokens = split_tokens(r.text);
      const std::size_t keep = std::min(max_len, tokens.size());
      std::string expected;
      for (std::size_t i = tokens.size() - keep; i < tokens.size(); ++i) {
        expected += (expected.empty() ? "" : " ") + tokens[i];
      }
      EXPECT_EQ(decode_sequence(seq, v), expected);
      for (std::size_t i = seq.true_length; i < max_len; ++i) EXPECT_EQ(seq.indices[i], 0u);
    }
  }
}

// ---------------------------------------------------------------------------
// balance_classes / stratified_split

TEST(BalanceClasses, UndersamplesMajority) {
  const auto b = balance_classes(corpus_of(100, 40), 1);
  EXPECT_EQ(b.positive_count(), 40u);
  EXPECT_EQ(b.negative_count(), 40u);
  // minority untouched and in order
  std::size_t seen = 0;
  for (const auto& r : b.reviews()) {
    if (r.label == 0) EXPECT_EQ(r.text, "n" + std::to_string(seen++));
  }
}

TEST(BalanceClasses, NoOpWhenBalanced) {
  const auto c = corpus_of(50, 50);
  EXPECT_EQ(balance_classes(c, 9), c);
}

TEST(BalanceClasses, LargeCorpusDeterministic) {
  const auto c = corpus_of(25000, 97061);
  const auto a = balance_classes(c, 77);
  const auto b = balance_classes(c, 77);
  EXPECT_EQ(a.positive_count(), 25000u);
  EXPECT_EQ(a.negative_count(), 25000u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, balance_classes(c, 78));
}

TEST(BalanceClasses, SurvivorsKeepRelativeOrder) {
  const auto b = balance_classes(corpus_of(30, 200), 4);
  int last = -1;
  for (const auto& r : b.reviews()) {
    if (r.label != 0) continue;
    const int idx = std::stoi(r.text.substr(1));
    EXPECT_GT(idx, last);
    last = idx;
  }
}

TEST(BalanceClasses, EmptyClassThrows) {
  EXPECT_THROW(balance_classes(corpus_of(5, 0), 1), DataError);
}

TEST(StratifiedSplit, ExactProportions) {
  auto s = stratified_split(corpus_of(70, 70), 0.3, 1);
  EXPECT_EQ(s.train.positive_count(), 49u);
  EXPECT_EQ(s.train.negative_count(), 49u);
  EXPECT_EQ(s.test.positive_count(), 21u);
  EXPECT_EQ(s.test.negative_count(), 21u);

  s = stratified_split(corpus_of(10, 10), 0.5, 1);
  EXPECT_EQ(s.train.positive_count(), 5u);
  EXPECT_EQ(s.test.negative_count(), 5u);
}

TEST(StratifiedSplit, FullCorpusScale) {
  // 28230·0.3 = 8469 exactly; 27397·0.3 = 8219.1 rounds to 8219.
  const auto s = stratified_split(corpus_of(28230, 27397), 0.3, 5);
  EXPECT_EQ(s.test.positive_count(), 8469u);
  EXPECT_EQ(s.test.negative_count(), 8219u);
  EXPECT_EQ(s.test.size(), 16688u);
  EXPECT_EQ(s.train.size(), 38939u);
}

TEST(StratifiedSplit, TooSmallClassThrows) {
  EXPECT_THROW(stratified_split(corpus_of(1, 10), 0.3, 1), DataError);
  EXPECT_THROW(stratified_split(corpus_of(2, 10), 0.1, 1), DataError);  // round(0.2) = 0
  EXPECT_THROW(stratified_split(corpus_of(10, 10), 1.0, 1), ConfigError);
}

TEST(StratifiedSplit, PartitionProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t pos = 5 + rng.index(300), neg = 5 + rng.index(300);
    const double f = 0.15 + 0.5 * rng.uniform01();
    const auto c = corpus_of(pos, neg);
    const auto s = stratified_split(c, f, trial);
    ASSERT_EQ(s.train.size() + s.test.size(), c.size());
    std::multiset<std::string> all, parts;
    for (const auto& r : c.reviews()) all.insert(r.text);
    for (const auto& r : s.train.reviews()) parts.insert(r.text);
    for (const auto& r : s.test.reviews()) parts.insert(r.text);
    EXPECT_EQ(all, parts);
    for (int label : {0, 1}) {
      const double n_c = static_cast<double>(c.count(label));
      EXPECT_LE(std::abs(static_cast<double>(s.test.count(label)) - n_c * f), 1.0);
      const double ratio_train = static_cast<double>(s.train.count(label)) / s.train.size();
      const double ratio_corpus = n_c / c.size();
      EXPECT_LE(std::abs(ratio_train - ratio_corpus), 1.0 / s.train.size() + 1e-15);
    }
  }
}

}  // namespace
}  // namespace sentiment
