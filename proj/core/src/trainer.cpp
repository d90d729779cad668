#include "dparse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "dparse/eval.hpp"

namespace dparse {

AdamHyper TrainingHyper::adam() const {
  AdamHyper a;
  a.learning_rate = learning_rate;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.epsilon = epsilon;
  a.anneal_base = anneal_base;
  a.anneal_denom = anneal_denom;
  return a;
}

void TrainingHyper::validate() const {
  if (!(learning_rate > 0.0) || !(anneal_base > 0.0) || !(anneal_denom > 0.0) ||
      !(beta1 > 0.0) || !(beta2 > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("TrainingHyper: all rates must be positive");
  if (epochs < 0 || batch_size_sentences < 1)
    throw std::invalid_argument("TrainingHyper: bad epochs/batch size");
  if (!(temperature > 0.0))
    throw std::invalid_argument("TrainingHyper: temperature must be positive");
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,train_loss,kl_arc,kl_lab,ce_arc,ce_lab,dev_uas,dev_las,seconds\n";
  out << std::setprecision(17);
  for (const auto& r : history)
    out << r.epoch << ',' << r.train_loss << ',' << r.kl_arc << ',' << r.kl_lab << ','
        << r.ce_arc << ',' << r.ce_lab << ',' << r.dev_uas << ',' << r.dev_las << ','
        << r.seconds << '\n';
}

namespace {

Graph::Var add_or(Graph& g, Graph::Var acc, Graph::Var x) {
  return acc < 0 ? x : g.add(acc, x);
}

// -sum of the gold entries of a log-distribution matrix
Graph::Var neg_pick_sum(Graph& g, Graph::Var log_rows, const std::vector<int>& gold) {
  return g.scale(g.sum(g.pick(log_rows, gold)), -1.0);
}

}  // namespace

BatchLossVars build_baseline_loss(Graph& g, const EncoderGraph& enc, const BatchIds& b,
                                  Parameters& params) {
  if (b.gold_labels.empty())
    throw std::invalid_argument("build_baseline_loss: batch lacks gold labels");
  BatchLossVars out;
  for (int s = 0; s < b.batch; ++s) {
    const Sentence& sent = *b.sents[static_cast<std::size_t>(s)];
    Graph::Var arc_log = g.log_softmax_rows(arc_score_graph(g, enc, b, s, params));
    out.ce_arc = add_or(g, out.ce_arc, neg_pick_sum(g, arc_log, sent.heads));
    Graph::Var lab_log = g.log_softmax_rows(
        label_score_graph(g, enc, b, s, sent.heads, params));
    out.ce_lab = add_or(g, out.ce_lab,
                        neg_pick_sum(g, lab_log, b.gold_labels[static_cast<std::size_t>(s)]));
    out.tokens += sent.size();
  }
  out.mean_loss = g.scale(g.add(out.ce_arc, out.ce_lab),
                          1.0 / static_cast<double>(out.tokens));
  return out;
}

BatchLossVars build_distill_loss(Graph& g, const EncoderGraph& enc, const BatchIds& b,
                                 Parameters& params, const DistillationTargets& targets,
                                 double temperature) {
  if (b.gold_labels.empty())
    throw std::invalid_argument("build_distill_loss: batch lacks gold labels");
  if (static_cast<int>(targets.sents.size()) != b.batch)
    throw std::invalid_argument("build_distill_loss: target/batch size mismatch");
  if (!(temperature > 0.0))
    throw std::invalid_argument("build_distill_loss: temperature must be positive");
  BatchLossVars out;
  for (int s = 0; s < b.batch; ++s) {
    const Sentence& sent = *b.sents[static_cast<std::size_t>(s)];
    const SentenceTargets& tg = targets.sents[static_cast<std::size_t>(s)];

    Graph::Var arc = arc_score_graph(g, enc, b, s, params);
    Graph::Var arc_log = g.log_softmax_rows(arc);
    out.ce_arc = add_or(g, out.ce_arc, neg_pick_sum(g, arc_log, sent.heads));
    Graph::Var arc_log_t =
        temperature == 1.0 ? arc_log : g.log_softmax_rows(g.scale(arc, 1.0 / temperature));
    out.kl_arc = add_or(g, out.kl_arc, g.kl_const(tg.arc_probs, arc_log_t));

    Graph::Var lab = label_score_graph(g, enc, b, s, sent.heads, params);
    Graph::Var lab_log = g.log_softmax_rows(lab);
    out.ce_lab = add_or(g, out.ce_lab,
                        neg_pick_sum(g, lab_log, b.gold_labels[static_cast<std::size_t>(s)]));
    Graph::Var lab_log_t =
        temperature == 1.0 ? lab_log : g.log_softmax_rows(g.scale(lab, 1.0 / temperature));
    out.kl_lab = add_or(g, out.kl_lab, g.kl_const(tg.label_probs, lab_log_t));

    out.tokens += sent.size();
  }
  Graph::Var total = g.add(g.add(out.kl_arc, out.kl_lab), g.add(out.ce_arc, out.ce_lab));
  out.mean_loss = g.scale(total, 1.0 / static_cast<double>(out.tokens));
  return out;
}

DistillationTargets teacher_distributions(const Parameters& teacher_params,
                                          const ModelConfig& teacher_cfg,
                                          const BatchIds& b, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("teacher_distributions: temperature must be positive");
  BatchScores f = forward_batch(b, teacher_params, teacher_cfg);
  DistillationTargets out;
  for (int s = 0; s < b.batch; ++s) {
    const Sentence& sent = *b.sents[static_cast<std::size_t>(s)];
    SentenceTargets tg;
    tg.arc_probs = arc_score_matrix(f, b, s, teacher_params);
    tg.label_probs = label_scores_at(f, b, s, sent.heads, teacher_params);
    for (Tensor* t : {&tg.arc_probs, &tg.label_probs}) {
      if (temperature != 1.0)
        for (std::int64_t i = 0; i < t->size(); ++i) (*t)[i] /= temperature;
      log_softmax_rows_inplace(*t);
      for (std::int64_t i = 0; i < t->size(); ++i) (*t)[i] = std::exp((*t)[i]);
    }
    out.sents.push_back(std::move(tg));
  }
  return out;
}

namespace {

std::vector<std::vector<const Sentence*>> length_buckets(const std::vector<Sentence>& data,
                                                         int batch_size) {
  std::vector<const Sentence*> ptrs;
  ptrs.reserve(data.size());
  for (const auto& s : data) ptrs.push_back(&s);
  std::stable_sort(ptrs.begin(), ptrs.end(),
                   [](const Sentence* a, const Sentence* b) { return a->size() < b->size(); });
  std::vector<std::vector<const Sentence*>> batches;
  for (std::size_t i = 0; i < ptrs.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(ptrs.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(ptrs.begin() + static_cast<std::ptrdiff_t>(i),
                         ptrs.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

AttachmentScores dev_scores(const std::vector<Sentence>& dev, const Parameters& params,
                            const ModelConfig& cfg, const Vocab& vocab) {
  std::vector<EvalPair> pairs;
  constexpr int kDevBatch = 64;
  for (std::size_t i = 0; i < dev.size(); i += kDevBatch) {
    std::vector<const Sentence*> chunk;
    const std::size_t end = std::min(dev.size(), i + kDevBatch);
    for (std::size_t j = i; j < end; ++j) chunk.push_back(&dev[j]);
    auto trees = parse_batch(chunk, params, cfg, vocab, /*single_root=*/true);
    for (std::size_t j = 0; j < chunk.size(); ++j)
      pairs.push_back({chunk[j], std::move(trees[j])});
  }
  return uas_las(pairs, vocab, /*include_punct=*/true);
}

struct TeacherRef {
  const Parameters* params = nullptr;
  const ModelConfig* cfg = nullptr;
};

TrainResult run_training(ModelConfig cfg, const std::vector<Sentence>& train,
                         const std::vector<Sentence>& dev, const Vocab& vocab,
                         const TrainingHyper& hyper, const Tensor* pretrained_word_emb,
                         const TeacherRef& teacher, const Parameters* init_from) {
  hyper.validate();
  const bool distill = teacher.params != nullptr;
  cfg.emb_dropout = distill ? 0.0 : hyper.emb_dropout;
  cfg.dropout = distill ? 0.0 : hyper.dropout;
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("run_training: empty treebank");

  std::mt19937_64 rng(hyper.seed);
  TrainResult result;
  result.config = cfg;
  if (init_from != nullptr) {
    result.params = *init_from;
    for (const auto& [name, shape] : param_shapes(cfg))
      if (result.params.at(name).value.shape() != shape)
        throw ConfigurationError("init_from parameters do not match the student config");
  } else {
    result.params = init_params(cfg, rng);
  }
  if (pretrained_word_emb != nullptr) {
    ParamTensor& emb = result.params.at("word_emb");
    if (!pretrained_word_emb->same_shape(emb.value))
      throw ConfigurationError("pretrained embedding matrix shape mismatch");
    emb.value = *pretrained_word_emb;
  }
  if (hyper.epochs == 0) return result;

  AdamState adam;
  adam.attach(result.params.tensors);
  auto batches = length_buckets(train, hyper.batch_size_sentences);
  std::vector<std::size_t> order(batches.size());
  std::iota(order.begin(), order.end(), 0);

  Parameters best = result.params;
  double best_las = -1.0;

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double sum_total = 0.0;
    double sum_kl_arc = 0.0, sum_kl_lab = 0.0, sum_ce_arc = 0.0, sum_ce_lab = 0.0;
    std::int64_t tokens = 0;
    for (std::size_t bi : order) {
      BatchIds b = make_batch(batches[bi], vocab, /*with_gold=*/true);
      Graph g;
      EncoderGraph enc =
          build_encoder_graph(g, b, result.params, cfg, /*train_mode=*/true, rng);
      BatchLossVars loss =
          distill ? build_distill_loss(g, enc, b, result.params,
                                       teacher_distributions(*teacher.params, *teacher.cfg,
                                                             b, hyper.temperature),
                                       hyper.temperature)
                  : build_baseline_loss(g, enc, b, result.params);
      const double batch_mean = g.value(loss.mean_loss)[0];
      if (!std::isfinite(batch_mean))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      result.params.zero_grads();
      g.backward(loss.mean_loss);
      adam.update(result.params.tensors, hyper.adam());

      tokens += loss.tokens;
      sum_total += batch_mean * static_cast<double>(loss.tokens);
      sum_ce_arc += g.value(loss.ce_arc)[0];
      sum_ce_lab += g.value(loss.ce_lab)[0];
      if (distill) {
        sum_kl_arc += g.value(loss.kl_arc)[0];
        sum_kl_lab += g.value(loss.kl_lab)[0];
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum_total / static_cast<double>(tokens);
    rec.kl_arc = sum_kl_arc / static_cast<double>(tokens);
    rec.kl_lab = sum_kl_lab / static_cast<double>(tokens);
    rec.ce_arc = sum_ce_arc / static_cast<double>(tokens);
    rec.ce_lab = sum_ce_lab / static_cast<double>(tokens);
    if (!dev.empty()) {
      AttachmentScores s = dev_scores(dev, result.params, cfg, vocab);
      rec.dev_uas = s.uas;
      rec.dev_las = s.las;
      if (s.las > best_las) {
        best_las = s.las;
        best = result.params;
        result.best_epoch = epoch;
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (hyper.early_stop_uas > 0.0 && !dev.empty() && rec.dev_uas >= hyper.early_stop_uas)
      break;
  }
  if (!dev.empty()) result.params = std::move(best);
  return result;
}

}  // namespace

TrainResult train_baseline(const ModelConfig& cfg, const std::vector<Sentence>& train,
                           const std::vector<Sentence>& dev, const Vocab& vocab,
                           const TrainingHyper& hyper, const Tensor* pretrained_word_emb) {
  return run_training(cfg, train, dev, vocab, hyper, pretrained_word_emb, {}, nullptr);
}

TrainResult train_distilled(const Parameters& teacher_params, const ModelConfig& teacher_cfg,
                            const Vocab& vocab, const ModelConfig& student_cfg,
                            const std::vector<Sentence>& train,
                            const std::vector<Sentence>& dev, const TrainingHyper& hyper,
                            const Parameters* init_from) {
  if (student_cfg.label_count != teacher_cfg.label_count ||
      student_cfg.word_vocab_size != teacher_cfg.word_vocab_size ||
      student_cfg.upos_vocab_size != teacher_cfg.upos_vocab_size)
    throw ConfigurationError("teacher and student must share vocab and label inventory");
  TeacherRef teacher{&teacher_params, &teacher_cfg};
  return run_training(student_cfg, train, dev, vocab, hyper, nullptr, teacher, init_from);
}

}  // namespace dparse
