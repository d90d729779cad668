#include "dparse/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace dparse {

namespace {

bool row_in(const RowMask& mask, int i) {
  return mask.empty() || mask[static_cast<std::size_t>(i)] != 0;
}

}  // namespace

LossValue ce_loss(const Tensor& log_probs, const std::vector<int>& gold,
                  const RowMask& mask) {
  const int r = log_probs.rows(), c = log_probs.cols();
  if (static_cast<int>(gold.size()) != r)
    throw std::invalid_argument("ce_loss: one gold id per row required");
  LossValue out;
  for (int i = 0; i < r; ++i) {
    if (!row_in(mask, i)) continue;
    const int gi = gold[static_cast<std::size_t>(i)];
    if (gi < 0 || gi >= c) throw std::out_of_range("ce_loss: gold id out of row range");
    out.sum -= log_probs.at(i, gi);
    ++out.tokens;
  }
  out.mean = out.tokens ? out.sum / static_cast<double>(out.tokens) : 0.0;
  return out;
}

LossValue kl_loss(const Tensor& teacher_probs, const Tensor& student_log,
                  const RowMask& mask) {
  if (!teacher_probs.same_shape(student_log))
    throw std::invalid_argument("kl_loss: shape mismatch");
  const int r = teacher_probs.rows(), c = teacher_probs.cols();
  LossValue out;
  for (int i = 0; i < r; ++i) {
    if (!row_in(mask, i)) continue;
    double rowsum = 0.0;
    double kl = 0.0;
    for (int j = 0; j < c; ++j) {
      const double p = teacher_probs.at(i, j);
      rowsum += p;
      if (p > 0.0) kl += p * (std::log(p) - student_log.at(i, j));
    }
    if (std::abs(rowsum - 1.0) > 1e-4)
      throw std::invalid_argument("kl_loss: teacher row does not sum to 1");
    out.sum += kl;
    ++out.tokens;
  }
  out.mean = out.tokens ? out.sum / static_cast<double>(out.tokens) : 0.0;
  return out;
}

DistillComponents distill_loss(const SentenceTargets& targets, const ScoreBundle& student,
                               const std::vector<int>& gold_heads,
                               const std::vector<int>& gold_labels, double temperature,
                               const RowMask& mask) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("distill_loss: temperature must be positive");
  const int n = student.arc_scores.rows();
  if (static_cast<int>(gold_heads.size()) != n ||
      static_cast<int>(gold_labels.size()) != n)
    throw std::invalid_argument("distill_loss: gold length mismatch");
  if (student.label_scores.rank() != 3)
    throw std::invalid_argument("distill_loss: student bundle lacks label scores");
  const int L = student.label_scores.dim(2);

  Tensor arc_log = student.arc_scores;
  log_softmax_rows_inplace(arc_log);

  Tensor lab_scores({n, L});
  for (int i = 0; i < n; ++i) {
    const int h = gold_heads[static_cast<std::size_t>(i)];
    for (int k = 0; k < L; ++k)
      lab_scores.at(i, k) =
          student.label_scores[(static_cast<std::size_t>(i) * (n + 1) + h) * L + k];
  }
  Tensor lab_log = lab_scores;
  log_softmax_rows_inplace(lab_log);

  DistillComponents out;
  out.ce_arc = ce_loss(arc_log, gold_heads, mask).sum;
  out.ce_lab = ce_loss(lab_log, gold_labels, mask).sum;

  Tensor arc_log_t = student.arc_scores;
  Tensor lab_log_t = lab_scores;
  if (temperature != 1.0) {
    for (std::int64_t i = 0; i < arc_log_t.size(); ++i) arc_log_t[i] /= temperature;
    for (std::int64_t i = 0; i < lab_log_t.size(); ++i) lab_log_t[i] /= temperature;
  }
  log_softmax_rows_inplace(arc_log_t);
  log_softmax_rows_inplace(lab_log_t);
  out.kl_arc = kl_loss(targets.arc_probs, arc_log_t, mask).sum;
  out.kl_lab = kl_loss(targets.label_probs, lab_log_t, mask).sum;
  return out;
}

}  // namespace dparse
