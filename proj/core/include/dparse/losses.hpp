#pragma once

#include <cstdint>
#include <vector>

#include "dparse/model.hpp"
#include "dparse/tensor.hpp"

namespace dparse {

/// Rows to include; empty mask means all rows.
using RowMask = std::vector<std::uint8_t>;

struct LossValue {
  double sum = 0.0;
  double mean = 0.0;  // per included token; optimizer minimizes the mean
  std::int64_t tokens = 0;
};

/// Categorical cross entropy: -sum_i log_probs[i, gold[i]] over
/// masked-in rows. Rows must be valid log-distributions.
LossValue ce_loss(const Tensor& log_probs, const std::vector<int>& gold,
                  const RowMask& mask = {});

/// KL(P || exp(Q_log)): sum_i sum_k P[i,k] (ln P[i,k] - Q_log[i,k])
/// over masked-in rows; P[i,k] = 0 terms contribute nothing. Each P row
/// must sum to 1 within 1e-4.
LossValue kl_loss(const Tensor& teacher_probs, const Tensor& student_log,
                  const RowMask& mask = {});

/// Frozen teacher output distributions for one sentence.
struct SentenceTargets {
  Tensor arc_probs;    // n x (n+1), rows sum to 1
  Tensor label_probs;  // n x L at the gold head of each token
};

struct DistillationTargets {
  std::vector<SentenceTargets> sents;
};

struct DistillComponents {
  double kl_arc = 0.0, kl_lab = 0.0, ce_arc = 0.0, ce_lab = 0.0;
  double total() const { return kl_arc + kl_lab + ce_arc + ce_lab; }
};

/// Combined distillation objective for one sentence, equal weights:
/// KL(T_h,S_h) + KL(T_lab,S_lab) + CE(h) + CE(lab). Temperature divides
/// both teacher and student logits before the KL softmaxes (the teacher
/// side must have been tempered identically when the targets were
/// extracted); the CE terms always use untempered student scores.
DistillComponents distill_loss(const SentenceTargets& targets, const ScoreBundle& student,
                               const std::vector<int>& gold_heads,
                               const std::vector<int>& gold_labels, double temperature,
                               const RowMask& mask = {});

}  // namespace dparse
