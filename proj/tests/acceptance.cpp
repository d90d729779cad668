// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
// and exits nonzero if any ran and failed. Pass criterion numbers as
// arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dparse/bench.hpp"
#include "dparse/config.hpp"
#include "dparse/conllu.hpp"
#include "dparse/eval.hpp"
#include "dparse/losses.hpp"
#include "dparse/model.hpp"
#include "dparse/trainer.hpp"
#include "grad_check.hpp"
#include "toy_grammar.hpp"
#include "tree_enum.hpp"

using namespace dparse;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Result {
  Outcome outcome;
  std::string detail;
};

ModelConfig sized_for(const Vocab& v, int wd, int ud, int lstm, int layers, int amlp,
                      int lmlp) {
  ModelConfig c;
  c.word_dim = wd;
  c.upos_dim = ud;
  c.lstm_dim = lstm;
  c.lstm_layers = layers;
  c.arc_mlp_dim = amlp;
  c.label_mlp_dim = lmlp;
  c.word_vocab_size = v.word_count();
  c.upos_vocab_size = v.upos_count();
  c.label_count = v.label_count();
  return c;
}

// ---- 1: reverse-mode gradients vs central finite differences ----
Result gradient_fidelity() {
  double worst = 0.0;
  for (const auto& op : gradcheck::op_cases()) {
    std::mt19937_64 rng(17);
    auto ps = gradcheck::make_params(op.shapes, rng);
    const double err = gradcheck::max_grad_error(ps, op.build);
    worst = std::max(worst, err);
    if (err >= 1e-4) return {Outcome::Fail, std::string("op ") + op.name};
  }

  // end-to-end distillation objective on a 3-token sentence
  Sentence sent;
  sent.tokens = {"dogs", "chase", "cats"};
  sent.upos = {"NOUN", "VERB", "NOUN"};
  sent.heads = {2, 0, 2};
  sent.labels = {"nsubj", "root", "obj"};
  Vocab vocab = build_vocab({sent}, 1);
  ModelConfig cfg = sized_for(vocab, 3, 2, 4, 1, 3, 2);
  cfg.emb_dropout = 0.0;
  cfg.dropout = 0.0;

  std::mt19937_64 rng_s(2), rng_t(9);
  Parameters student = init_params(cfg, rng_s);
  Parameters teacher = init_params(cfg, rng_t);
  BatchIds b = make_batch({&sent}, vocab, true);
  DistillationTargets targets = teacher_distributions(teacher, cfg, b, 1.0);

  gradcheck::Builder build = [&](Graph& g, std::vector<ParamTensor>&) {
    std::mt19937_64 dummy(0);
    EncoderGraph enc = build_encoder_graph(g, b, student, cfg, false, dummy);
    return build_distill_loss(g, enc, b, student, targets, 1.0).mean_loss;
  };
  const double err = gradcheck::max_grad_error(student.tensors, build);
  worst = std::max(worst, err);
  std::ostringstream d;
  d << "max rel err " << worst;
  return {err < 1e-4 ? Outcome::Pass : Outcome::Fail, d.str()};
}

// ---- 2: decoder vs exhaustive arborescence enumeration ----
Result decoder_exactness() {
  std::mt19937_64 rng(2025);
  int cases = 0;
  for (int n = 1; n <= 6; ++n) {
    for (int t = 0; t < 90; ++t) {
      Tensor s = treeenum::random_scores(n, rng);
      for (bool single : {false, true}) {
        auto h = chu_liu_edmonds(s, single);
        if (!is_tree(h)) return {Outcome::Fail, "non-tree output"};
        if (single) {
          int roots = 0;
          for (int x : h) roots += x == 0;
          if (roots != 1) return {Outcome::Fail, "root constraint violated"};
        }
        const double got = tree_score(s, h);
        const double want = treeenum::best_tree_exhaustive(s, single);
        if (std::abs(got - want) > 1e-9)
          return {Outcome::Fail, "suboptimal tree at n=" + std::to_string(n)};
        ++cases;
      }
    }
  }
  return {Outcome::Pass, std::to_string(cases) + " matrices optimal"};
}

// ---- 3: loss identities ----
Result loss_identities() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + static_cast<int>(rng() % 6);
    Tensor p({1, k}), q({1, k});
    double sp = 0.0, sq = 0.0;
    for (int j = 0; j < k; ++j) {
      p[j] = u(rng);
      q[j] = u(rng);
      sp += p[j];
      sq += q[j];
    }
    Tensor qlog({1, k});
    for (int j = 0; j < k; ++j) {
      p[j] /= sp;
      qlog[j] = std::log(q[j] / sq);
    }
    if (kl_loss(p, qlog).sum < -1e-12) return {Outcome::Fail, "negative KL"};
    Tensor plog({1, k});
    for (int j = 0; j < k; ++j) plog[j] = std::log(p[j]);
    if (std::abs(kl_loss(p, plog).sum) > 1e-9)
      return {Outcome::Fail, "KL of identical pair not zero"};
  }
  for (int k : {2, 4, 7}) {
    Tensor lp({1, k});
    lp.fill(std::log(1.0 / k));
    if (std::abs(ce_loss(lp, {k / 2}).mean - std::log(static_cast<double>(k))) > 1e-9)
      return {Outcome::Fail, "uniform CE is not ln k"};
  }

  // matched teacher/student collapses to the CE terms
  ScoreBundle s;
  s.arc_scores = Tensor({2, 3}, {0.3, -1.0, 2.0, 1.5, 0.2, -0.7});
  s.label_scores = Tensor({2, 3, 2});
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  for (std::int64_t i = 0; i < s.label_scores.size(); ++i) s.label_scores[i] = w(rng);
  const std::vector<int> heads = {2, 0}, labels = {0, 1};
  SentenceTargets tg;
  tg.arc_probs = s.arc_scores;
  log_softmax_rows_inplace(tg.arc_probs);
  for (std::int64_t i = 0; i < tg.arc_probs.size(); ++i)
    tg.arc_probs[i] = std::exp(tg.arc_probs[i]);
  tg.label_probs = Tensor({2, 2});
  for (int i = 0; i < 2; ++i) {
    std::vector<double> row(2);
    for (int k = 0; k < 2; ++k)
      row[static_cast<std::size_t>(k)] =
          s.label_scores[(static_cast<std::int64_t>(i) * 3 + heads[static_cast<std::size_t>(i)]) * 2 + k];
    auto lr = log_softmax(row);
    for (int k = 0; k < 2; ++k)
      tg.label_probs.at(i, k) = std::exp(lr[static_cast<std::size_t>(k)]);
  }
  DistillComponents c = distill_loss(tg, s, heads, labels, 1.0);
  if (std::abs(c.kl_arc) > 1e-9 || std::abs(c.kl_lab) > 1e-9)
    return {Outcome::Fail, "matched teacher leaves residual KL"};
  if (std::abs(c.total() - (c.ce_arc + c.ce_lab)) > 1e-12)
    return {Outcome::Fail, "total is not the CE sum"};
  return {Outcome::Pass, "KL/CE identities hold"};
}

// ---- 4: student sizing ----
Result sizing_fidelity() {
  ModelConfig full;  // architecture defaults
  full.word_vocab_size = 10000;
  full.upos_vocab_size = 20;
  full.label_count = 40;
  const double base = static_cast<double>(count_params(full));
  std::ostringstream d;
  for (double f : {0.2, 0.4, 0.6, 0.8}) {
    ModelConfig s = size_student(full, f);
    const double got = static_cast<double>(count_params(s)) / base;
    d << ' ' << got;
    if (std::abs(got - f) > 0.015) return {Outcome::Fail, "fraction off at target"};
  }
  return {Outcome::Pass, "achieved fractions" + d.str()};
}

// ---- 5: overfit sanity on 32 sentences ----
Result overfit_sanity() {
  auto corpus = toy::generate_corpus(32, 77);
  Vocab vocab = build_vocab(corpus, 1);
  ModelConfig cfg = sized_for(vocab, 100, 100, 400, 3, 500, 100);
  TrainingHyper hyper;
  hyper.epochs = 200;
  hyper.batch_size_sentences = 8;
  hyper.seed = 3;
  hyper.early_stop_uas = 99.0;
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult r = train_baseline(cfg, corpus, corpus, vocab, hyper);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double best = 0.0;
  for (const auto& e : r.history) best = std::max(best, e.dev_uas);
  std::ostringstream d;
  d << "train UAS " << best << " after " << r.history.size() << " epochs, " << secs << "s";
  if (secs >= 600.0) return {Outcome::Fail, d.str() + " (over budget)"};
  return {best >= 99.0 ? Outcome::Pass : Outcome::Fail, d.str()};
}

// the lexical (verb, prepositional-noun) pair of a sentence, if any
std::string pp_pair(const Sentence& s) {
  std::string verb, noun;
  for (int i = 0; i < s.size(); ++i) {
    if (s.labels[static_cast<std::size_t>(i)] == "root") verb = s.tokens[static_cast<std::size_t>(i)];
    if (s.labels[static_cast<std::size_t>(i)] == "nmod" ||
        s.labels[static_cast<std::size_t>(i)] == "obl")
      noun = s.tokens[static_cast<std::size_t>(i)];
  }
  return noun.empty() ? std::string() : verb + '\t' + noun;
}

// ---- 6: distillation beats the same-size baseline ----
Result distillation_signal() {
  auto train = toy::generate_corpus(550, 11);
  // keep only dev sentences whose attachment facts occur in training,
  // so every ambiguous arc is in principle learnable
  std::set<std::string> seen;
  for (const auto& s : train) {
    auto p = pp_pair(s);
    if (!p.empty()) seen.insert(p);
  }
  std::vector<Sentence> dev;
  auto dev_pool = toy::generate_corpus(800, 12);
  for (auto& s : dev_pool) {
    auto p = pp_pair(s);
    if (p.empty() || seen.count(p)) dev.push_back(std::move(s));
    if (dev.size() == 200) break;
  }
  Vocab vocab = build_vocab(train, 1);
  ModelConfig teacher_cfg = sized_for(vocab, 48, 16, 128, 2, 128, 32);

  TrainingHyper hyper;
  hyper.epochs = 60;
  hyper.batch_size_sentences = 32;
  hyper.seed = 1;
  TrainResult teacher = train_baseline(teacher_cfg, train, dev, vocab, hyper);
  double teacher_uas = 0.0;
  for (const auto& e : teacher.history) teacher_uas = std::max(teacher_uas, e.dev_uas);

  ModelConfig small_cfg = size_student(teacher_cfg, 0.2);
  double b_mean = 0.0, d_mean = 0.0;
  for (std::uint64_t seed : {21, 22, 23}) {
    TrainingHyper h = hyper;
    h.seed = seed;
    h.epochs = 40;
    TrainResult b = train_baseline(small_cfg, train, dev, vocab, h);
    TrainResult d = train_distilled(teacher.params, teacher.config, vocab, small_cfg,
                                    train, dev, h);
    double bu = 0.0, du = 0.0;
    for (const auto& e : b.history) bu = std::max(bu, e.dev_uas);
    for (const auto& e : d.history) du = std::max(du, e.dev_uas);
    b_mean += bu / 3.0;
    d_mean += du / 3.0;
  }
  std::ostringstream det;
  det << "teacher " << teacher_uas << ", B-20 " << b_mean << ", D-20 " << d_mean;
  const bool ok = d_mean + 1e-9 >= b_mean && teacher_uas + 1e-9 >= b_mean &&
                  teacher_uas + 1e-9 >= d_mean;
  return {ok ? Outcome::Pass : Outcome::Fail, det.str()};
}

// ---- 7: throughput scales with model size ----
Result speed_scaling() {
  auto corpus = toy::generate_corpus(256, 5);
  Vocab vocab = build_vocab(corpus, 1);
  ModelConfig full = sized_for(vocab, 100, 100, 400, 3, 500, 100);
  std::vector<std::pair<std::string, ModelConfig>> configs = {{"Full", full}};
  for (double f : {0.2, 0.4, 0.6, 0.8}) {
    std::ostringstream tag;
    tag << "D-" << static_cast<int>(f * 100);
    configs.emplace_back(tag.str(), size_student(full, f));
  }
  std::vector<double> tok_s;
  std::ostringstream det;
  for (auto& [tag, cfg] : configs) {
    std::mt19937_64 rng(4);
    Parameters p = init_params(cfg, rng);
    auto records = bench_speed(p, cfg, vocab, corpus, tag, {256}, 3);
    auto sums = summarize(records);
    tok_s.push_back(sums.at(0).mean_tok_per_s);
    det << ' ' << tag << ' ' << static_cast<std::int64_t>(sums.at(0).mean_tok_per_s);
  }
  const bool ratio_ok = tok_s[1] >= 1.5 * tok_s[0];
  const bool order_ok = tok_s[1] > tok_s[2] && tok_s[2] > tok_s[3] && tok_s[3] > tok_s[4];

  // larger batches should never slow the full model down; uniform-length
  // sentences so the sweep measures batching overhead rather than padding
  std::vector<Sentence> small;
  for (const auto& s : toy::generate_corpus(1200, 9)) {
    if (s.size() != 9) continue;
    small.push_back(s);
    if (small.size() == 96) break;
  }
  std::mt19937_64 rng(4);
  Parameters full_params = init_params(full, rng);
  // best-of-runs per batch size: scheduler noise only ever slows a run down
  std::map<int, double> best;
  for (const auto& rec : bench_speed(full_params, full, vocab, small, "Full", {1, 16, 64}, 5))
    best[rec.batch_size] = std::max(best[rec.batch_size], rec.tokens_per_sec);
  // non-decreasing up to a 3% timing-noise margin: throughput plateaus once
  // per-batch overhead is amortized, so strict comparison would flip on noise
  const bool mono_ok =
      0.97 * best.at(1) <= best.at(16) && 0.97 * best.at(16) <= best.at(64);
  det << "; sweep";
  for (const auto& [bs, t] : best) det << ' ' << bs << ':' << std::lround(t);

  std::string msg = "tok/s" + det.str();
  if (!ratio_ok) msg += " (D-20/Full < 1.5)";
  if (!order_ok) msg += " (ordering broken)";
  if (!mono_ok) msg += " (batch-size scaling not monotone)";
  return {ratio_ok && order_ok && mono_ok ? Outcome::Pass : Outcome::Fail, msg};
}

// ---- 8: attachment metric vs naive recount ----
Result metric_oracle() {
  Sentence s;
  s.tokens = {"The", "son", "of", "the", "cat", "hunts", "the", "rat"};
  s.upos = {"DET", "NOUN", "ADP", "DET", "NOUN", "VERB", "DET", "NOUN"};
  s.heads = {2, 6, 5, 5, 2, 0, 8, 6};
  s.labels = {"det", "nsubj", "case", "det", "nmod", "root", "det", "obj"};
  Vocab v = build_vocab({s}, 1);

  DecodedTree gold;
  gold.heads = s.heads;
  for (const auto& l : s.labels) gold.labels.push_back(v.label_id(l));
  DecodedTree one_label_wrong = gold;
  one_label_wrong.labels[4] = v.label_id("obj");
  auto scores = uas_las({{&s, one_label_wrong}}, v);
  if (std::abs(scores.uas - 100.0) > 1e-12 || std::abs(scores.las - 87.5) > 1e-12)
    return {Outcome::Fail, "worked example mismatch"};

  std::mt19937_64 rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalPair> pairs;
    std::int64_t total = 0, heads_ok = 0, both_ok = 0;
    for (int si = 0; si < 4; ++si) {
      DecodedTree t;
      for (int i = 0; i < s.size(); ++i) {
        t.heads.push_back(static_cast<int>(rng() % 9));
        t.labels.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(v.label_count())));
      }
      for (int i = 0; i < s.size(); ++i) {
        ++total;
        if (t.heads[static_cast<std::size_t>(i)] == s.heads[static_cast<std::size_t>(i)]) {
          ++heads_ok;
          if (t.labels[static_cast<std::size_t>(i)] ==
              v.label_id(s.labels[static_cast<std::size_t>(i)]))
            ++both_ok;
        }
      }
      pairs.push_back({&s, std::move(t)});
    }
    auto got = uas_las(pairs, v);
    const double uas = 100.0 * static_cast<double>(heads_ok) / static_cast<double>(total);
    const double las = 100.0 * static_cast<double>(both_ok) / static_cast<double>(total);
    if (std::abs(got.uas - uas) > 1e-12 || std::abs(got.las - las) > 1e-12)
      return {Outcome::Fail, "recount mismatch"};
    if (got.las > got.uas + 1e-12) return {Outcome::Fail, "LAS exceeds UAS"};
  }
  return {Outcome::Pass, "100 random sets match the recount"};
}

// ---- 9: published treebank statistics ----
Result stats_reproduction() {
  std::vector<std::string> candidates;
  if (const char* dir = std::getenv("DPARSE_UD_DIR"))
    candidates.push_back(std::string(dir) + "/en_ewt-ud-train.conllu");
  candidates.push_back("data/en_ewt-ud-train.conllu");
  candidates.push_back("../data/en_ewt-ud-train.conllu");
  for (const auto& path : candidates) {
    if (!std::filesystem::exists(path)) continue;
    TreebankStats st = treebank_stats(parse_conllu_file(path));
    std::ostringstream d;
    d << path << ": " << st.tree_count << " trees, avg len " << st.avg_sent_length;
    const bool ok = st.tree_count == 12543 && std::abs(st.avg_sent_length - 17.3) <= 0.1;
    return {ok ? Outcome::Pass : Outcome::Fail, d.str()};
  }
  return {Outcome::Skip, "no UD treebank found (set DPARSE_UD_DIR)"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int number;
    const char* name;
    Result (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "decoder exactness", decoder_exactness},
      {3, "loss identities", loss_identities},
      {4, "sizing fidelity", sizing_fidelity},
      {5, "overfit sanity", overfit_sanity},
      {6, "distillation signal", distillation_signal},
      {7, "speed scaling", speed_scaling},
      {8, "metric oracle", metric_oracle},
      {9, "stats reproduction", stats_reproduction},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  bool failed = false;
  for (const auto& c : criteria) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), c.number) == wanted.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result r = c.run();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* verdict = r.outcome == Outcome::Pass   ? "PASS"
                          : r.outcome == Outcome::Fail ? "FAIL"
                                                       : "SKIP";
    std::cout << "criterion " << c.number << " (" << c.name << "): " << verdict << " - "
              << r.detail << " [" << secs << "s]\n"
              << std::flush;
    failed |= r.outcome == Outcome::Fail;
  }
  return failed ? 1 : 0;
}
