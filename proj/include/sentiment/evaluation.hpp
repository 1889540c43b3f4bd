// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "sentiment/errors.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/training.hpp"

namespace sentiment {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusion_matrix(const std::vector<int>& predictions,
                                        const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("confusion_matrix: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw DimensionError("confusion_matrix: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1, y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (!p && !y) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

// Per-class ratios with a flag for each that had a zero denominator (and
// was therefore reported as 0).
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct ClassificationReport {
  ConfusionCounts counts;
  std::uint64_t n = 0;
  double accuracy = 0.0;
  ClassMetrics positive;
  ClassMetrics negative;
  double percent_loss = 0.0;  // 100 x mean test BCE
};

namespace detail {

inline ClassMetrics class_metrics(std::uint64_t hit, std::uint64_t false_alarm, std::uint64_t miss) {
  ClassMetrics m;
  auto ratio = [](std::uint64_t a, std::uint64_t b, bool& undefined) {
    if (b == 0) {
      undefined = true;
      return 0.0;
    }
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.precision = ratio(hit, hit + false_alarm, m.precision_undefined);
  m.recall = ratio(hit, hit + miss, m.recall_undefined);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_undefined = true;
  }
  return m;
}

}  // namespace detail

inline ClassificationReport classification_report(const ConfusionCounts& counts,
                                                  double mean_test_loss) {
  ClassificationReport r;
  r.counts = counts;
  r.n = counts.total();
  if (r.n == 0) throw DimensionError("classification_report: no examples");
  r.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(r.n);
  r.positive = detail::class_metrics(counts.tp, counts.fp, counts.fn);
  r.negative = detail::class_metrics(counts.tn, counts.fn, counts.fp);
  r.percent_loss = 100.0 * mean_test_loss;
  return r;
}

// ---------------------------------------------------------------------------
// Report file: one "key value" per line, fixed keys in fixed order.

inline void write_report(std::ostream& out, const ClassificationReport& r) {
  char buf[64];
  auto real = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s %.6f\n", key, v);
    out << buf;
  };
  out << "n " << r.n << "\n"
      << "tp " << r.counts.tp << "\n"
      << "tn " << r.counts.tn << "\n"
      << "fp " << r.counts.fp << "\n"
      << "fn " << r.counts.fn << "\n";
  real("accuracy", r.accuracy);
  real("precision_pos", r.positive.precision);
  real("recall_pos", r.positive.recall);
  real("f1_pos", r.positive.f1);
  real("precision_neg", r.negative.precision);
  real("recall_neg", r.negative.recall);
  real("f1_neg", r.negative.f1);
  real("percent_loss", r.percent_loss);
}

// Reads the counts back and recomputes the ratios from them; percent_loss
// is taken from the file.
inline ClassificationReport read_report(std::istream& in, const std::string& origin = "") {
  std::map<std::string, std::string, std::less<>> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto sep = t.find_first_of(" \t=");
    if (sep == std::string_view::npos) throw DataError(origin, line_no, "expected 'key value'");
    auto value = detail::trim(t.substr(sep + 1));
    if (!value.empty() && value.front() == '=') value = detail::trim(value.substr(1));
    values[std::string(t.substr(0, sep))] = std::string(value);
  }
  auto count = [&](std::string_view key) {
    auto it = values.find(key);
    if (it == values.end()) throw DataError(origin, 0, "report lacks key '" + std::string(key) + "'");
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw DataError(origin, 0, "key '" + std::string(key) + "' must be a non-negative integer");
    }
    return v;
  };
  ConfusionCounts c{count("tp"), count("tn"), count("fp"), count("fn")};
  const auto n = count("n");
  if (n != c.total()) throw DataError(origin, 0, "n does not equal tp+tn+fp+fn");
  double percent = 0.0;
  if (auto it = values.find("percent_loss"); it != values.end()) {
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), percent);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw DataError(origin, 0, "percent_loss must be a number");
    }
  }
  return classification_report(c, percent / 100.0);
}

inline void save_report(const std::string& path, const ClassificationReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path, 0, "cannot write report");
  write_report(out, r);
}

inline ClassificationReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open report");
  return read_report(in, path);
}

// ---------------------------------------------------------------------------
// Chi-square test of independence

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1.0;
};

using CountTable = std::vector<std::vector<std::uint64_t>>;

// Pearson statistic over a rows x cols table of counts. The p-value is the
// upper tail Q(df/2, statistic/2) of the regularized incomplete gamma.
inline ChiSquareResult chi_square_test(const CountTable& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw DimensionError("chi_square_test: need at least 2 rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw DimensionError("chi_square_test: need at least 2 columns");
  std::vector<double> row_total(rows, 0.0), col_total(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) throw DimensionError("chi_square_test: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = static_cast<double>(table[i][j]);
      row_total[i] += v;
      col_total[j] += v;
      total += v;
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_total[i] == 0.0) throw DimensionError("chi_square_test: row " + std::to_string(i) + " sums to zero");
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_total[j] == 0.0) throw DimensionError("chi_square_test: column " + std::to_string(j) + " sums to zero");
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_total[i] * col_total[j] / total;
      const double diff = static_cast<double>(table[i][j]) - expected;
      r.statistic += diff * diff / expected;
    }
  }
  r.degrees_of_freedom = (rows - 1) * (cols - 1);
  r.p_value = boost::math::gamma_q(static_cast<double>(r.degrees_of_freedom) / 2.0, r.statistic / 2.0);
  return r;
}

// ---------------------------------------------------------------------------
// Model evaluation

struct Evaluation {
  ClassificationReport report;
  std::vector<double> probabilities;
  std::size_t degenerate = 0;  // all-PAD inputs (scored 0.5)
};

inline Evaluation evaluate_model(const ModelParams& params, const EncodedCorpus& test,
                                 const RunOptions& options = {}) {
  if (test.empty()) throw DataError("", 0, "evaluate_model: empty test set");
  for (const auto& ex : test) {
    for (std::size_t t = 0; t < ex.sequence.true_length; ++t) {
      if (ex.sequence.indices[t] >= params.embedding.vocab_size()) {
        throw ModelMismatchError("evaluate_model: token index " +
                                 std::to_string(ex.sequence.indices[t]) +
                                 " outside the model's vocabulary");
      }
    }
  }
  Evaluation out;
  out.probabilities = predict_all(params, test, options);
  std::vector<int> predictions(test.size()), labels(test.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    predictions[i] = classify(out.probabilities[i]);
    labels[i] = test[i].label;
    loss += bce_loss(test[i].label, out.probabilities[i]);
    out.degenerate += test[i].sequence.true_length == 0 ? 1 : 0;
  }
  out.report = classification_report(confusion_matrix(predictions, labels),
                                      loss / static_cast<double>(test.size()));
  return out;
}

// Human-readable metric table.
inline void print_report_table(std::ostream& out, const std::vector<std::string>& names,
                               const std::vector<ClassificationReport>& reports) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s %8s %8s %8s %8s %8s %8s\n", "model", "n",
                "acc", "prec+", "rec+", "f1+", "prec-", "rec-", "f1-", "loss%");
  out << buf;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::snprintf(buf, sizeof buf, "%-24s %8llu %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.2f\n",
                  names[i].c_str(), static_cast<unsigned long long>(r.n), r.accuracy,
                  r.positive.precision, r.positive.recall, r.positive.f1, r.negative.precision,
                  r.negative.recall, r.negative.f1, r.percent_loss);
    out << buf;
  }
}

}  // namespace sentiment
