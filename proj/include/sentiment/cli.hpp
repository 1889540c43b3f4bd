// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Batch command-line surface: train, evaluate, predict, compare.
//
// Exit codes: 0 success, 1 internal failure, 2 configuration or usage,
// 3 data or I/O, 4 model/vocabulary mismatch.
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "sentiment/checkpoint.hpp"
#include "sentiment/embeddings.hpp"
#include "sentiment/errors.hpp"
#include "sentiment/evaluation.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/text_pipeline.hpp"
#include "sentiment/training.hpp"

namespace sentiment {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitMismatch = 4,
};

// Everything a `train` run reads: TrainConfig fields plus paths and
// pipeline switches.
struct CliConfig {
  TrainConfig train;
  std::string data;             // dataset path
  std::string format;           // csv | jsonl; empty = from extension
  std::string stopwords;        // path; empty = built-in list
  std::string whitelist;        // path; empty = built-in negations/boosters
  std::string embeddings;       // word2vec text file; empty = none
  std::string out;              // output directory
  bool balance = true;          // undersample the majority class
  bool deterministic = true;
  std::size_t threads = 1;      // 0 = all hardware threads

  static bool parse_bool(const std::string& key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + std::string(v) + "'");
  }

  void set(std::string_view key, std::string_view value) {
    const std::string k(key);
    if (key == "data") data = value;
    else if (key == "format") {
      if (!value.empty()) (void)parse_dataset_format(value);
      format = value;
    } else if (key == "stopwords") stopwords = value;
    else if (key == "whitelist") whitelist = value;
    else if (key == "embeddings") embeddings = value;
    else if (key == "out") out = value;
    else if (key == "balance") balance = parse_bool(k, value);
    else if (key == "deterministic") deterministic = parse_bool(k, value);
    else if (key == "threads") {
      std::size_t n = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc() || p != value.data() + value.size()) {
        throw ConfigError(k, "expected a non-negative integer");
      }
      threads = n;
    } else train.set(key, value);
  }

  // "key = value" lines; '#' starts a comment.
  void load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      auto t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config", path + ":" + std::to_string(line_no) + ": expected key = value");
      }
      set(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
  }

  void set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "expected key=value");
    std::string_view a(assignment);
    set(detail::trim(a.substr(0, eq)), detail::trim(a.substr(eq + 1)));
  }

  DatasetFormat dataset_format() const {
    return format.empty() ? dataset_format_for(data) : parse_dataset_format(format);
  }

  RunOptions run_options() const { return {threads, deterministic}; }
};

namespace detail {

inline TokenSet token_list_or(const std::string& path, const TokenSet& fallback) {
  return path.empty() ? fallback : read_token_file(path);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string(), 0, "cannot write file");
  out << text;
}

inline std::string report_text(const ClassificationReport& r) {
  std::ostringstream s;
  write_report(s, r);
  return s.str();
}

inline std::string seconds(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  std::filesystem::path report;
  std::filesystem::path timing;
};

inline TrainArtifacts run_train(const CliConfig& cfg, std::ostream& out, std::ostream& log) {
  using Clock = std::chrono::steady_clock;
  cfg.train.validate();
  if (cfg.data.empty()) throw ConfigError("data", "a dataset path is required");
  if (cfg.out.empty()) throw ConfigError("out", "an output directory is required");
  const auto format = cfg.dataset_format();
  const TokenSet stopwords = detail::token_list_or(cfg.stopwords, default_stopwords());
  const TokenSet whitelist = detail::token_list_or(cfg.whitelist, default_whitelist());
  const auto& tc = cfg.train;

  const auto t0 = Clock::now();
  LabeledCorpus corpus = clean_corpus(load_dataset(cfg.data, format), stopwords, whitelist);
  log << "loaded " << corpus.size() << " reviews (" << corpus.positive_count() << " positive, "
      << corpus.negative_count() << " negative)\n";
  if (cfg.balance) {
    corpus = balance_classes(corpus, tc.seed);
    log << "balanced to " << corpus.positive_count() << " + " << corpus.negative_count() << "\n";
  }
  auto outer = stratified_split(corpus, tc.test_fraction, tc.seed);
  auto inner = stratified_split(outer.train, tc.validation_fraction, mix_seed(tc.seed, 1));
  const Vocabulary vocab = build_vocabulary(inner.train, tc.vocab_size, tc.min_freq);
  const auto train_set = encode_corpus(inner.train, vocab, tc.max_len);
  const auto val_set = encode_corpus(inner.test, vocab, tc.max_len);
  const auto test_set = encode_corpus(outer.test, vocab, tc.max_len);
  log << "train " << train_set.size() << ", validation " << val_set.size() << ", test "
      << test_set.size() << ", vocabulary " << vocab.size() << "\n";

  ModelParams initial = ModelParams::initialize(tc.stack, tc.dims(vocab.size()), tc.seed);
  if (!cfg.embeddings.empty()) {
    const auto replaced = apply_pretrained(initial.embedding, vocab, load_word2vec_text(cfg.embeddings));
    log << "pretrained vectors for " << replaced << " of " << vocab.size() - 2 << " tokens\n";
  }
  const auto t1 = Clock::now();
  auto result = fit(tc, std::move(initial), train_set, val_set, cfg.run_options(),
                    [&](const EpochRecord& e) {
                      char buf[160];
                      std::snprintf(buf, sizeof buf,
                                    "epoch %zu: loss %.4f acc %.4f | val loss %.4f acc %.4f\n",
                                    e.epoch, e.train_loss, e.train_accuracy, e.validation_loss,
                                    e.validation_accuracy);
                      log << buf << std::flush;
                    });
  const auto t2 = Clock::now();
  const auto evaluation = evaluate_model(result.params, test_set, cfg.run_options());
  const auto t3 = Clock::now();

  std::filesystem::create_directories(cfg.out);
  const std::filesystem::path dir(cfg.out);
  TrainArtifacts a{dir / "model.ckpt", dir / "history.tsv", dir / "report.txt", dir / "timing.txt"};
  save_checkpoint(a.checkpoint.string(), Checkpoint{result.params, tc, vocab, stopwords, whitelist});
  std::ostringstream history;
  write_history(history, result.history);
  detail::write_text_file(a.history, history.str());
  detail::write_text_file(a.report, detail::report_text(evaluation.report));

  using Seconds = std::chrono::duration<double>;
  const double infer_s = Seconds(t3 - t2).count();
  std::ostringstream timing;
  timing << "preprocess_seconds " << detail::seconds(Seconds(t1 - t0).count()) << "\n"
         << "train_seconds " << detail::seconds(Seconds(t2 - t1).count()) << "\n"
         << "test_inference_seconds " << detail::seconds(infer_s) << "\n"
         << "inference_ms_per_review "
         << detail::seconds(1000.0 * infer_s / static_cast<double>(test_set.size())) << "\n";
  detail::write_text_file(a.timing, timing.str());

  out << "stop: " << to_string(result.history.stop_reason) << " at epoch "
      << result.history.stop_epoch << " (best epoch " << result.history.best_epoch << ")\n";
  print_report_table(out, {std::string(to_string(tc.stack))}, {evaluation.report});
  return a;
}

// Config keys that fix the model's shape or preprocessing; an evaluate
// config that disagrees with the checkpoint on any of them is a mismatch.
inline void check_model_config(const TrainConfig& ckpt, const TrainConfig& requested) {
  const auto a = ckpt.to_key_values();
  const auto b = requested.to_key_values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& key = a[i].first;
    if ((key == "embedding_dim" || key == "gru_units" || key == "lstm_units" || key == "max_len" ||
         key == "stack") &&
        a[i].second != b[i].second) {
      throw ModelMismatchError("config key '" + key + "' is " + b[i].second +
                               " but the checkpoint has " + a[i].second);
    }
  }
}

inline ClassificationReport run_evaluate(const std::string& checkpoint_path, const CliConfig& cfg,
                                         bool check_config, std::ostream& out) {
  if (cfg.data.empty()) throw ConfigError("data", "a dataset path is required");
  const auto format = cfg.dataset_format();
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (ckpt.params.embedding.vocab_size() != ckpt.vocab.size()) {
    throw ModelMismatchError("checkpoint vocabulary does not match its embedding table");
  }
  if (check_config) check_model_config(ckpt.config, cfg.train);
  const auto corpus = clean_corpus(load_dataset(cfg.data, format), ckpt.stopwords, ckpt.whitelist);
  const auto encoded = encode_corpus(corpus, ckpt.vocab, ckpt.config.max_len);
  const auto evaluation = evaluate_model(ckpt.params, encoded, cfg.run_options());
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    save_report((std::filesystem::path(cfg.out) / "report.txt").string(), evaluation.report);
  }
  print_report_table(out, {std::string(to_string(ckpt.params.stack))}, {evaluation.report});
  write_report(out, evaluation.report);
  return evaluation.report;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void run_predict(const std::string& checkpoint_path, const std::vector<std::string>& texts,
                        std::ostream& out) {
  if (texts.empty()) throw ConfigError("text", "no input to predict");
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  char buf[64];
  for (const auto& text : texts) {
    const auto seq = encode_sequence(clean_text(text, ckpt.stopwords, ckpt.whitelist), ckpt.vocab,
                                     ckpt.config.max_len);
    const double p = predict_probability(ckpt.params, seq);
    std::snprintf(buf, sizeof buf, "%.6f\t%d\n", p, classify(p));
    out << buf;
  }
}

struct CompareResult {
  ChiSquareResult chi_square;
  std::vector<ClassificationReport> reports;
};

// models x {tp, tn, fp, fn}. Outcome columns that are zero in every report
// carry no information and are dropped before the test.
inline CompareResult run_compare(const std::vector<std::string>& paths, std::ostream& out) {
  if (paths.size() < 2) throw ConfigError("reports", "need at least two report files");
  CompareResult r;
  for (const auto& p : paths) r.reports.push_back(load_report(p));
  for (std::size_t i = 1; i < r.reports.size(); ++i) {
    if (r.reports[i].n != r.reports[0].n) {
      throw ConfigError("reports", paths[0] + " has n=" + std::to_string(r.reports[0].n) + " but " +
                                       paths[i] + " has n=" + std::to_string(r.reports[i].n));
    }
  }
  CountTable table;
  for (const auto& rep : r.reports) {
    table.push_back({rep.counts.tp, rep.counts.tn, rep.counts.fp, rep.counts.fn});
  }
  for (std::size_t c = table.front().size(); c-- > 0;) {
    bool all_zero = true;
    for (const auto& row : table) all_zero = all_zero && row[c] == 0;
    if (all_zero) {
      for (auto& row : table) row.erase(row.begin() + static_cast<std::ptrdiff_t>(c));
    }
  }
  if (table.front().size() >= 2) r.chi_square = chi_square_test(table);

  char buf[128];
  std::snprintf(buf, sizeof buf, "chi_square %.4f\ndf %zu\np_value %.6g\n", r.chi_square.statistic,
                r.chi_square.degrees_of_freedom, r.chi_square.p_value);
  out << buf;
  print_report_table(out, paths, r.reports);
  return r;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Opinion mining with a bidirectional-GRU + LSTM classifier"};
  app.require_subcommand(1);

  std::string config_path, data, format, out_dir, checkpoint, input_file;
  std::uint64_t seed = 0;
  bool deterministic = true;
  std::size_t threads = 1;
  std::vector<std::string> overrides, texts, reports;

  auto shared = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--seed", seed, "random seed (overrides the config)");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--deterministic", deterministic, "ordered gradient reduction (default true)");
    cmd->add_option("--threads", threads, "worker threads, 0 = all cores");
  };

  auto* train = app.add_subcommand("train", "train a model and evaluate it on the held-out split");
  shared(train);
  train->add_option("--data", data, "labeled dataset (csv or jsonl)");
  train->add_option("--format", format, "csv or jsonl (default: from extension)");
  train->add_option("--set", overrides, "override a config key, key=value")->take_all();

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a labeled dataset");
  shared(evaluate);
  evaluate->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  evaluate->add_option("--data", data, "labeled dataset")->required();
  evaluate->add_option("--format", format, "csv or jsonl (default: from extension)");

  auto* predict = app.add_subcommand("predict", "print probability and label per review");
  shared(predict);
  predict->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  predict->add_option("--text", texts, "review text (repeatable)");
  predict->add_option("--input", input_file, "file with one review per line");

  auto* compare = app.add_subcommand("compare", "chi-square test over two or more reports");
  shared(compare);
  compare->add_option("reports", reports, "report files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CliConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& o : overrides) cfg.set_assignment(o);
    auto given = [](CLI::App* cmd, const char* flag) { return cmd->count(flag) > 0; };
    CLI::App* cmd = app.get_subcommands().front();
    if (given(cmd, "--seed")) cfg.train.seed = seed;
    if (given(cmd, "--out")) cfg.out = out_dir;
    if (given(cmd, "--deterministic")) cfg.deterministic = deterministic;
    if (given(cmd, "--threads")) cfg.threads = threads;
    if (cmd == train || cmd == evaluate) {
      if (!data.empty()) cfg.data = data;
      if (!format.empty()) cfg.set("format", format);
    }

    if (cmd == train) {
      run_train(cfg, out, err);
    } else if (cmd == evaluate) {
      run_evaluate(checkpoint, cfg, !config_path.empty(), out);
    } else if (cmd == predict) {
      if (!input_file.empty()) {
        for (auto& line : read_lines(input_file)) texts.push_back(std::move(line));
      }
      run_predict(checkpoint, texts, out);
    } else {
      run_compare(reports, out);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const ModelMismatchError& e) {
    err << "model mismatch: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace sentiment
