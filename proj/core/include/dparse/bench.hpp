#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dparse/eval.hpp"
#include "dparse/model.hpp"

namespace dparse {

struct BenchRecord {
  std::string model_tag;
  int batch_size = 0;
  int run_index = 0;
  double sentences_per_sec = 0.0;
  double tokens_per_sec = 0.0;
  double wall_seconds = 0.0;
  bool degenerate = false;  // batch size exceeded the corpus
};

struct BenchSummary {
  std::string model_tag;
  int batch_size = 0;
  double mean_tok_per_s = 0.0;
  double stderr_tok_per_s = 0.0;  // sample stddev / sqrt(runs)
  double mean_sent_per_s = 0.0;
  double stderr_sent_per_s = 0.0;
};

/// Times full inference passes (batch assembly, encoder, scoring,
/// Chu-Liu/Edmonds, labels) over the treebank; model load and file
/// parsing happen outside the timed region. Single compute thread.
std::vector<BenchRecord> bench_speed(const Parameters& params, const ModelConfig& cfg,
                                     const Vocab& vocab,
                                     const std::vector<Sentence>& treebank,
                                     const std::string& model_tag,
                                     const std::vector<int>& batch_sizes, int runs,
                                     bool single_root = true);

std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records);

void emit_csv(const std::vector<BenchRecord>& records, std::ostream& out);
std::vector<BenchRecord> parse_bench_csv(std::istream& in);

struct EvalRow {
  std::string model_tag;
  std::string treebank;
  AttachmentScores scores;
};

void emit_csv(const std::vector<EvalRow>& rows, std::ostream& out);

/// Table-style summary: one tok/s row and one sent/s row per model.
void print_summary_table(const std::vector<BenchSummary>& summaries, std::ostream& out);

}  // namespace dparse
