#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dparse/adam.hpp"
#include "dparse/losses.hpp"
#include "dparse/model.hpp"

namespace dparse {

struct TrainingHyper {
  double learning_rate = 2e-3;
  double anneal_base = 0.75;
  double anneal_denom = 5000.0;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon = 1e-12;
  int epochs = 100;
  int batch_size_sentences = 32;
  double emb_dropout = 0.33;
  double dropout = 0.33;
  std::uint64_t seed = 1;
  double temperature = 1.0;
  // stop once dev UAS reaches this value; <= 0 disables
  double early_stop_uas = 0.0;

  AdamHyper adam() const;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // per-token mean over the epoch
  double kl_arc = 0.0, kl_lab = 0.0, ce_arc = 0.0, ce_lab = 0.0;  // per-token means
  double dev_uas = 0.0, dev_las = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Parameters params;  // best-dev-LAS checkpoint (final params when no dev data)
  ModelConfig config;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
};

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

/// Scalar loss nodes for one batch; mean_loss is the optimizer target.
struct BatchLossVars {
  Graph::Var mean_loss = -1;
  Graph::Var kl_arc = -1, kl_lab = -1, ce_arc = -1, ce_lab = -1;  // sums; -1 if absent
  std::int64_t tokens = 0;
};

/// CE(h) + CE(lab) over the batch (gold labels must be resolved in b).
BatchLossVars build_baseline_loss(Graph& g, const EncoderGraph& enc, const BatchIds& b,
                                  Parameters& params);

/// KL(T_h,S_h) + KL(T_lab,S_lab) + CE(h) + CE(lab), equal weights.
BatchLossVars build_distill_loss(Graph& g, const EncoderGraph& enc, const BatchIds& b,
                                 Parameters& params, const DistillationTargets& targets,
                                 double temperature);

/// Teacher output distributions for a batch, computed in inference mode
/// (no dropout): arc softmax rows per token and label softmax rows at
/// each token's gold head. Logits are divided by temperature first.
DistillationTargets teacher_distributions(const Parameters& teacher_params,
                                          const ModelConfig& teacher_cfg,
                                          const BatchIds& b, double temperature);

TrainResult train_baseline(const ModelConfig& cfg, const std::vector<Sentence>& train,
                           const std::vector<Sentence>& dev, const Vocab& vocab,
                           const TrainingHyper& hyper,
                           const Tensor* pretrained_word_emb = nullptr);

/// Same loop with the distillation objective, all dropout forced to 0
/// and the teacher frozen. Teacher distributions are recomputed per
/// batch. The student shares the teacher's vocab; init_from (optional)
/// seeds the student with existing weights of the same shape.
TrainResult train_distilled(const Parameters& teacher_params, const ModelConfig& teacher_cfg,
                            const Vocab& vocab, const ModelConfig& student_cfg,
                            const std::vector<Sentence>& train,
                            const std::vector<Sentence>& dev, const TrainingHyper& hyper,
                            const Parameters* init_from = nullptr);

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dparse
