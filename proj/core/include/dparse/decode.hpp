#pragma once

#include <vector>

#include "dparse/tensor.hpp"

namespace dparse {

struct DecodedTree {
  std::vector<int> heads;   // per token, in [0, n]
  std::vector<int> labels;  // per token label id
  double score = 0.0;       // total arc score
};

/// Maximum-score arborescence rooted at 0 for an n x (n+1) score matrix
/// (row = dependent 1..n, column = head candidate with ROOT at 0).
/// With single_root, exactly one token attaches to ROOT; the best tree
/// is found by fixing each candidate root in turn.
std::vector<int> chu_liu_edmonds(const Tensor& arc_scores, bool single_root);

/// Per-row argmax; may contain cycles. Ties break toward the smallest
/// head index.
std::vector<int> greedy_heads(const Tensor& arc_scores);

/// labels[i] = argmax_k label_scores[i, heads[i], k]; ties toward the
/// smallest label id. label_scores: {n, n+1, L}.
std::vector<int> assign_labels(const Tensor& label_scores, const std::vector<int>& heads);

double tree_score(const Tensor& arc_scores, const std::vector<int>& heads);

}  // namespace dparse
