#pragma once

#include <iosfwd>
#include <random>

#include "dparse/tensor.hpp"
#include "dparse/vocab.hpp"

namespace dparse {

struct EmbeddingLoad {
  Tensor matrix;    // word_count x dim
  double coverage;  // fraction of non-reserved vocab words found in the file
};

/// Text embeddings, one "word v1 v2 ... vdim" line each. A leading
/// "count dim" header line is tolerated. Rows for words missing from
/// the file (and reserved ids) are drawn uniform in +-1/sqrt(dim).
EmbeddingLoad load_embeddings(std::istream& in, const Vocab& vocab, int dim,
                              std::mt19937_64& rng);

struct EmbeddingFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dparse
