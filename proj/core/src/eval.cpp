#include "dparse/eval.hpp"

#include <stdexcept>

namespace dparse {

AttachmentScores uas_las(const std::vector<EvalPair>& pairs, const Vocab& vocab,
                         bool include_punct) {
  if (pairs.empty()) throw std::invalid_argument("uas_las: no evaluation pairs");
  std::int64_t total = 0, head_ok = 0, both_ok = 0;
  for (const auto& pair : pairs) {
    const Sentence& gold = *pair.gold;
    const DecodedTree& pred = pair.predicted;
    if (static_cast<int>(pred.heads.size()) != gold.size())
      throw std::invalid_argument("uas_las: sentence length mismatch");
    for (int i = 0; i < gold.size(); ++i) {
      if (!include_punct && gold.upos[static_cast<std::size_t>(i)] == "PUNCT") continue;
      ++total;
      if (pred.heads[static_cast<std::size_t>(i)] != gold.heads[static_cast<std::size_t>(i)])
        continue;
      ++head_ok;
      // a gold label missing from the vocab can never be predicted
      if (pred.labels[static_cast<std::size_t>(i)] ==
          vocab.label_id_or(gold.labels[static_cast<std::size_t>(i)], -1))
        ++both_ok;
    }
  }
  AttachmentScores s;
  if (total) {
    s.uas = 100.0 * static_cast<double>(head_ok) / static_cast<double>(total);
    s.las = 100.0 * static_cast<double>(both_ok) / static_cast<double>(total);
  }
  return s;
}

}  // namespace dparse
