#pragma once

#include <utility>
#include <vector>

#include "dparse/conllu.hpp"
#include "dparse/decode.hpp"
#include "dparse/vocab.hpp"

namespace dparse {

struct EvalPair {
  const Sentence* gold = nullptr;
  DecodedTree predicted;
};

struct AttachmentScores {
  double uas = 0.0;  // percent of tokens with the correct head
  double las = 0.0;  // percent with correct head and label
};

/// Micro-averaged over all tokens. With include_punct off, tokens whose
/// UPOS is PUNCT are dropped from numerator and denominator. Predicted
/// labels are compared through the given label id resolver.
AttachmentScores uas_las(const std::vector<EvalPair>& pairs, const Vocab& vocab,
                         bool include_punct = true);

}  // namespace dparse
