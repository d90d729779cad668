#include <doctest.h>

#include <random>
#include <sstream>

#include "dparse/trainer.hpp"
#include "toy_grammar.hpp"

using namespace dparse;

namespace {

struct Fixture {
  std::vector<Sentence> train;
  Vocab vocab;
  ModelConfig cfg;
  TrainingHyper hyper;

  explicit Fixture(int sentences = 8) {
    train = toy::generate_corpus(sentences, 21);
    vocab = build_vocab(train, 1);
    cfg.word_dim = 8;
    cfg.upos_dim = 4;
    cfg.lstm_dim = 8;
    cfg.lstm_layers = 1;
    cfg.arc_mlp_dim = 6;
    cfg.label_mlp_dim = 4;
    cfg.word_vocab_size = vocab.word_count();
    cfg.upos_vocab_size = vocab.upos_count();
    cfg.label_count = vocab.label_count();
    hyper.epochs = 3;
    hyper.batch_size_sentences = 4;
    hyper.seed = 5;
  }
};

}  // namespace

TEST_CASE("training loss decreases on a small corpus") {
  Fixture f;
  f.hyper.epochs = 25;
  f.hyper.emb_dropout = 0.0;
  f.hyper.dropout = 0.0;
  TrainResult r = train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper);
  REQUIRE(r.history.size() == 25);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
  for (const auto& e : r.history) {
    CHECK(e.kl_arc == 0.0);  // no teacher, no KL terms
    CHECK(e.kl_lab == 0.0);
    CHECK(e.train_loss == doctest::Approx(e.ce_arc + e.ce_lab).epsilon(1e-9));
  }
}

TEST_CASE("same seed reproduces the run exactly") {
  Fixture f;
  TrainResult a = train_baseline(f.cfg, f.train, f.train, f.vocab, f.hyper);
  TrainResult b = train_baseline(f.cfg, f.train, f.train, f.vocab, f.hyper);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].dev_uas == b.history[i].dev_uas);
  }
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i)
    for (std::int64_t j = 0; j < a.params.tensors[i].value.size(); ++j)
      CHECK(a.params.tensors[i].value[j] == b.params.tensors[i].value[j]);
}

TEST_CASE("zero epochs returns initialized weights and no history") {
  Fixture f;
  f.hyper.epochs = 0;
  TrainResult r = train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper);
  CHECK(r.history.empty());
  CHECK(r.best_epoch == -1);
  CHECK(!r.params.tensors.empty());
}

TEST_CASE("identity student starts with zero KL") {
  Fixture f;
  f.hyper.epochs = 2;
  f.hyper.emb_dropout = 0.0;
  f.hyper.dropout = 0.0;
  TrainResult teacher = train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper);

  // one distillation batch with the student equal to the teacher
  std::vector<const Sentence*> ptrs;
  for (const auto& s : f.train) ptrs.push_back(&s);
  BatchIds b = make_batch(ptrs, f.vocab, true);
  DistillationTargets targets =
      teacher_distributions(teacher.params, teacher.config, b, 1.0);
  Graph g;
  std::mt19937_64 rng(1);
  EncoderGraph enc =
      build_encoder_graph(g, b, teacher.params, teacher.config, false, rng);
  BatchLossVars loss = build_distill_loss(g, enc, b, teacher.params, targets, 1.0);
  CHECK(g.value(loss.kl_arc)[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(g.value(loss.kl_lab)[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(g.value(loss.ce_arc)[0] > 0.0);
}

TEST_CASE("distillation records all four loss components") {
  Fixture f;
  f.hyper.epochs = 2;
  TrainResult teacher = train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper);
  ModelConfig student_cfg = f.cfg;
  student_cfg.lstm_dim = 4;
  student_cfg.arc_mlp_dim = 4;
  TrainingHyper h = f.hyper;
  h.epochs = 3;
  TrainResult student = train_distilled(teacher.params, teacher.config, f.vocab,
                                        student_cfg, f.train, f.train, h);
  REQUIRE(student.history.size() == 3);
  for (const auto& e : student.history) {
    CHECK(e.kl_arc > 0.0);
    CHECK(e.kl_lab > 0.0);
    CHECK(e.ce_arc > 0.0);
    CHECK(e.train_loss ==
          doctest::Approx(e.kl_arc + e.kl_lab + e.ce_arc + e.ce_lab).epsilon(1e-9));
  }
  CHECK(student.config.dropout == 0.0);
  CHECK(student.config.emb_dropout == 0.0);
}

TEST_CASE("teacher and student must share the vocabulary") {
  Fixture f;
  f.hyper.epochs = 1;
  TrainResult teacher = train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper);
  ModelConfig other = f.cfg;
  other.word_vocab_size += 5;
  CHECK_THROWS_AS(train_distilled(teacher.params, teacher.config, f.vocab, other,
                                  f.train, {}, f.hyper),
                  ConfigurationError);
}

TEST_CASE("history CSV layout") {
  std::vector<EpochRecord> h(2);
  h[0].epoch = 1;
  h[0].train_loss = 2.5;
  h[1].epoch = 2;
  h[1].train_loss = 1.25;
  h[1].dev_uas = 80.0;
  std::ostringstream out;
  write_history_csv(h, out);
  const std::string s = out.str();
  CHECK(s.rfind("epoch,train_loss,kl_arc,kl_lab,ce_arc,ce_lab,dev_uas,dev_las,seconds\n",
                0) == 0);
  CHECK(s.find("\n1,2.5,") != std::string::npos);
  CHECK(s.find("\n2,1.25,") != std::string::npos);
}

TEST_CASE("invalid hyperparameters are rejected") {
  Fixture f;
  f.hyper.learning_rate = 0.0;
  CHECK_THROWS_AS(train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper),
                  std::invalid_argument);
  f.hyper.learning_rate = 1e-3;
  f.hyper.batch_size_sentences = 0;
  CHECK_THROWS_AS(train_baseline(f.cfg, f.train, {}, f.vocab, f.hyper),
                  std::invalid_argument);
}
