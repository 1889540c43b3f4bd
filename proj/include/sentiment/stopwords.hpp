// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

namespace sentiment {

// Bump when the list changes; stored in checkpoints via the token listing.
inline constexpr std::string_view kStopwordListVersion = "en-1";

// English function words (the common NLTK-derived set, apostrophes removed
// because cleaning splits on them). Negations and boosters are on this list
// too; the default whitelist is what keeps them.
inline const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "i",       "me",      "my",     "myself", "we",     "our",     "ours",
      "ourselves", "you",   "your",   "yours",  "yourself", "yourselves", "he",
      "him",     "his",     "himself", "she",   "her",    "hers",    "herself",
      "it",      "its",     "itself", "they",   "them",   "their",   "theirs",
      "themselves", "what", "which",  "who",    "whom",   "this",    "that",
      "these",   "those",   "am",     "is",     "are",    "was",     "were",
      "be",      "been",    "being",  "have",   "has",    "had",     "having",
      "do",      "does",    "did",    "doing",  "a",      "an",      "the",
      "and",     "but",     "if",     "or",     "because", "as",     "until",
      "while",   "of",      "at",     "by",     "for",    "with",    "about",
      "against", "between", "into",   "through", "during", "before", "after",
      "above",   "below",   "to",     "from",   "up",     "down",    "in",
      "out",     "on",      "off",    "over",   "under",  "again",   "further",
      "then",    "once",    "here",   "there",  "when",   "where",   "why",
      "how",     "all",     "any",    "both",   "each",   "few",     "more",
      "most",    "other",   "some",   "such",   "no",     "nor",     "not",
      "only",    "own",     "same",   "so",     "than",   "too",     "very",
      "s",       "t",       "can",    "will",   "just",   "don",     "should",
      "now",     "d",       "ll",     "m",      "o",      "re",      "ve",
      "y",       "ain",     "aren",   "couldn", "didn",   "doesn",   "hadn",
      "hasn",    "haven",   "isn",    "ma",     "mightn", "mustn",   "needn",
      "shan",    "shouldn", "wasn",   "weren",  "won",    "wouldn", "br",
  };
  return words;
}

// Negations and intensity boosters that survive stopword removal.
inline const std::unordered_set<std::string>& default_whitelist() {
  static const std::unordered_set<std::string> words = {
      "not", "no", "never", "nor", "n't", "very", "extremely", "really", "too", "so",
  };
  return words;
}

}  // namespace sentiment
