#include "dparse/embeddings.hpp"

#include <cmath>
#include <istream>
#include <sstream>

namespace dparse {

EmbeddingLoad load_embeddings(std::istream& in, const Vocab& vocab, int dim,
                              std::mt19937_64& rng) {
  if (dim < 1) throw std::invalid_argument("load_embeddings: dim must be >= 1");
  const int rows = vocab.word_count();
  EmbeddingLoad out;
  out.matrix = Tensor({rows, dim});
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> uni(-bound, bound);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < dim; ++j) out.matrix.at(i, j) = uni(rng);

  std::vector<bool> seen(static_cast<std::size_t>(rows), false);
  std::string line;
  int line_no = 0;
  std::int64_t matched = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (line_no == 1 && vals.size() == 1) {
      // "count dim" header line
      continue;
    }
    if (static_cast<int>(vals.size()) != dim)
      throw EmbeddingFormatError("embedding line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(dim) + " values, got " +
                                 std::to_string(vals.size()));
    const int id = vocab.word_id(word);
    if (id < Vocab::kReserved || seen[static_cast<std::size_t>(id)]) continue;
    seen[static_cast<std::size_t>(id)] = true;
    ++matched;
    for (int j = 0; j < dim; ++j) out.matrix.at(id, j) = vals[static_cast<std::size_t>(j)];
  }
  const std::size_t vocab_words = vocab.word_list().size();
  out.coverage = vocab_words ? static_cast<double>(matched) / static_cast<double>(vocab_words) : 0.0;
  return out;
}

}  // namespace dparse
