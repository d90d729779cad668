#include "dparse/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dparse {

std::vector<BenchRecord> bench_speed(const Parameters& params, const ModelConfig& cfg,
                                     const Vocab& vocab,
                                     const std::vector<Sentence>& treebank,
                                     const std::string& model_tag,
                                     const std::vector<int>& batch_sizes, int runs,
                                     bool single_root) {
  if (treebank.empty()) throw std::invalid_argument("bench_speed: empty treebank");
  if (runs < 1) throw std::invalid_argument("bench_speed: runs must be >= 1");
  std::int64_t tokens = 0;
  for (const auto& s : treebank) tokens += s.size();
  const auto n_sents = static_cast<std::int64_t>(treebank.size());

  std::vector<BenchRecord> out;
  for (int bs : batch_sizes) {
    if (bs < 1) throw std::invalid_argument("bench_speed: batch size must be >= 1");
    const bool degenerate = bs > static_cast<int>(treebank.size());
    for (int run = 0; run < runs; ++run) {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t start = 0; start < treebank.size(); start += static_cast<std::size_t>(bs)) {
        std::vector<const Sentence*> chunk;
        const std::size_t end = std::min(treebank.size(), start + static_cast<std::size_t>(bs));
        for (std::size_t i = start; i < end; ++i) chunk.push_back(&treebank[i]);
        parse_batch(chunk, params, cfg, vocab, single_root);
      }
      const auto t1 = std::chrono::steady_clock::now();
      BenchRecord r;
      r.model_tag = model_tag;
      r.batch_size = bs;
      r.run_index = run;
      r.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
      r.sentences_per_sec = static_cast<double>(n_sents) / r.wall_seconds;
      r.tokens_per_sec = static_cast<double>(tokens) / r.wall_seconds;
      r.degenerate = degenerate;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records) {
  std::map<std::pair<std::string, int>, std::vector<const BenchRecord*>> groups;
  for (const auto& r : records) groups[{r.model_tag, r.batch_size}].push_back(&r);
  std::vector<BenchSummary> out;
  for (const auto& [key, rs] : groups) {
    BenchSummary s;
    s.model_tag = key.first;
    s.batch_size = key.second;
    const double n = static_cast<double>(rs.size());
    for (const auto* r : rs) {
      s.mean_tok_per_s += r->tokens_per_sec / n;
      s.mean_sent_per_s += r->sentences_per_sec / n;
    }
    if (rs.size() > 1) {
      double vt = 0.0, vs = 0.0;
      for (const auto* r : rs) {
        vt += (r->tokens_per_sec - s.mean_tok_per_s) * (r->tokens_per_sec - s.mean_tok_per_s);
        vs += (r->sentences_per_sec - s.mean_sent_per_s) *
              (r->sentences_per_sec - s.mean_sent_per_s);
      }
      s.stderr_tok_per_s = std::sqrt(vt / (n - 1.0)) / std::sqrt(n);
      s.stderr_sent_per_s = std::sqrt(vs / (n - 1.0)) / std::sqrt(n);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void emit_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
  out << "model_tag,batch_size,run,sent_per_s,tok_per_s,wall_s\n";
  out << std::setprecision(17);
  for (const auto& r : records)
    out << r.model_tag << ',' << r.batch_size << ',' << r.run_index << ','
        << r.sentences_per_sec << ',' << r.tokens_per_sec << ',' << r.wall_seconds << '\n';
}

std::vector<BenchRecord> parse_bench_csv(std::istream& in) {
  std::vector<BenchRecord> out;
  std::string line;
  if (!std::getline(in, line)) return out;  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    BenchRecord r;
    std::string field;
    std::getline(ls, r.model_tag, ',');
    std::getline(ls, field, ',');
    r.batch_size = std::stoi(field);
    std::getline(ls, field, ',');
    r.run_index = std::stoi(field);
    std::getline(ls, field, ',');
    r.sentences_per_sec = std::stod(field);
    std::getline(ls, field, ',');
    r.tokens_per_sec = std::stod(field);
    std::getline(ls, field, ',');
    r.wall_seconds = std::stod(field);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_csv(const std::vector<EvalRow>& rows, std::ostream& out) {
  out << "model_tag,treebank,uas,las\n";
  for (const auto& r : rows)
    out << r.model_tag << ',' << r.treebank << ',' << r.scores.uas << ',' << r.scores.las
        << '\n';
}

void print_summary_table(const std::vector<BenchSummary>& summaries, std::ostream& out) {
  out << std::fixed << std::setprecision(1);
  std::string last_tag;
  for (const auto& s : summaries) {
    if (s.model_tag != last_tag) {
      out << s.model_tag << '\n';
      last_tag = s.model_tag;
    }
    out << "  batch " << std::setw(4) << s.batch_size << "  (tok/s) " << std::setw(10)
        << s.mean_tok_per_s << " +- " << s.stderr_tok_per_s << "  (sent/s) " << std::setw(8)
        << s.mean_sent_per_s << " +- " << s.stderr_sent_per_s << '\n';
  }
}

}  // namespace dparse
