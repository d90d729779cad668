#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "dparse/model.hpp"

using namespace dparse;

namespace {

ModelConfig toy_config() {
  ModelConfig c;
  c.word_vocab_size = 10;
  c.upos_vocab_size = 3;
  c.word_dim = 2;
  c.upos_dim = 2;
  c.lstm_dim = 4;
  c.lstm_layers = 1;
  c.arc_mlp_dim = 3;
  c.label_mlp_dim = 2;
  c.mlp_layers = 1;
  c.label_count = 2;
  return c;
}

ModelConfig full_config() {
  ModelConfig c;  // architecture defaults
  c.word_vocab_size = 10000;
  c.upos_vocab_size = 20;
  c.label_count = 40;
  return c;
}

std::vector<Sentence> tiny_corpus() {
  Sentence a;
  a.tokens = {"the", "dog", "barks"};
  a.upos = {"DET", "NOUN", "VERB"};
  a.heads = {2, 3, 0};
  a.labels = {"det", "nsubj", "root"};
  Sentence b;
  b.tokens = {"cats", "sleep"};
  b.upos = {"NOUN", "VERB"};
  b.heads = {2, 0};
  b.labels = {"nsubj", "root"};
  return {a, b};
}

}  // namespace

TEST_CASE("parameter count of a small architecture") {
  // frozen value from an independent shape enumeration
  CHECK(count_params(toy_config()) == 218);
}

TEST_CASE("doubling every dimension strictly increases the count") {
  ModelConfig c = toy_config();
  ModelConfig d = c;
  d.word_dim *= 2;
  d.upos_dim *= 2;
  d.lstm_dim *= 2;
  d.arc_mlp_dim *= 2;
  d.label_mlp_dim *= 2;
  CHECK(count_params(d) > count_params(c));
}

TEST_CASE("count matches the allocated tensors") {
  std::mt19937_64 rng(3);
  Parameters p = init_params(toy_config(), rng);
  std::int64_t total = 0;
  for (const auto& t : p.tensors) total += t.value.size();
  CHECK(total == count_params(toy_config()));
}

TEST_CASE("initialization: zero biases, bounded weights") {
  std::mt19937_64 rng(4);
  ModelConfig cfg = toy_config();
  Parameters p = init_params(cfg, rng);
  for (std::int64_t i = 0; i < p.at("arc_dep.l0.b").value.size(); ++i)
    CHECK(p.at("arc_dep.l0.b").value[i] == 0.0);
  for (std::int64_t i = 0; i < p.at("lstm.l0.fw.b").value.size(); ++i)
    CHECK(p.at("lstm.l0.fw.b").value[i] == 0.0);
  const Tensor& w = p.at("arc_dep.l0.w").value;
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.lstm_dim));
  bool nonzero = false;
  for (std::int64_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(w[i]) <= bound);
    nonzero |= w[i] != 0.0;
  }
  CHECK(nonzero);
}

TEST_CASE("student sizing hits the requested fractions") {
  ModelConfig full = full_config();
  const auto base = count_params(full);
  for (double f : {0.2, 0.4, 0.6, 0.8}) {
    ModelConfig s = size_student(full, f);
    const double got = static_cast<double>(count_params(s)) / static_cast<double>(base);
    INFO("fraction " << f << " got " << got);
    CHECK(std::abs(got - f) <= 0.015);
    CHECK(s.lstm_dim % 2 == 0);
    CHECK(s.lstm_layers == full.lstm_layers);
    CHECK(s.word_vocab_size == full.word_vocab_size);
  }
}

TEST_CASE("sizing with target 1.0 is the identity") {
  ModelConfig full = full_config();
  ModelConfig s = size_student(full, 1.0);
  CHECK(count_params(s) == count_params(full));
  CHECK(s.word_dim == full.word_dim);
  CHECK(s.lstm_dim == full.lstm_dim);
}

TEST_CASE("unattainable fractions raise a sizing error") {
  CHECK_THROWS_AS(size_student(toy_config(), 0.5), SizingError);
  CHECK_THROWS_AS(size_student(full_config(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(size_student(full_config(), 1.5), std::invalid_argument);
}

TEST_CASE("batch layout is time-major with ROOT first") {
  auto corpus = tiny_corpus();
  Vocab v = build_vocab(corpus, 1);
  std::vector<const Sentence*> ptrs = {&corpus[0], &corpus[1]};
  BatchIds b = make_batch(ptrs, v, true);
  CHECK(b.batch == 2);
  CHECK(b.max_len == 3);
  CHECK(b.token_count() == 5);
  CHECK(b.word_ids[static_cast<std::size_t>(b.row(0, 0))] == Vocab::kRoot);
  CHECK(b.word_ids[static_cast<std::size_t>(b.row(0, 1))] == Vocab::kRoot);
  CHECK(b.word_ids[static_cast<std::size_t>(b.row(1, 0))] == v.word_id("the"));
  CHECK(b.word_ids[static_cast<std::size_t>(b.row(1, 1))] == v.word_id("cats"));
  // padding past the short sentence
  CHECK(b.word_ids[static_cast<std::size_t>(b.row(3, 1))] == Vocab::kPad);
  CHECK(b.gold_labels[0].size() == 3);
  CHECK(b.gold_labels[0][0] == v.label_id("det"));
}

TEST_CASE("inference scores are unchanged by batch padding") {
  auto corpus = tiny_corpus();
  Vocab v = build_vocab(corpus, 1);
  ModelConfig cfg = toy_config();
  cfg.word_vocab_size = v.word_count();
  cfg.upos_vocab_size = v.upos_count();
  cfg.label_count = v.label_count();
  std::mt19937_64 rng(11);
  Parameters p = init_params(cfg, rng);

  // short sentence alone vs padded next to the longer one
  BatchIds solo = make_batch({&corpus[1]}, v);
  BatchIds both = make_batch({&corpus[0], &corpus[1]}, v);
  BatchScores fs = forward_batch(solo, p, cfg);
  BatchScores fb = forward_batch(both, p, cfg);
  Tensor a1 = arc_score_matrix(fs, solo, 0, p);
  Tensor a2 = arc_score_matrix(fb, both, 1, p);
  REQUIRE(a1.same_shape(a2));
  for (std::int64_t i = 0; i < a1.size(); ++i) CHECK(a1[i] == a2[i]);  // bit-exact

  Tensor l1 = label_scores_full(fs, solo, 0, p);
  Tensor l2 = label_scores_full(fb, both, 1, p);
  for (std::int64_t i = 0; i < l1.size(); ++i) CHECK(l1[i] == l2[i]);
}

TEST_CASE("graph forward agrees with the tape-free forward") {
  auto corpus = tiny_corpus();
  Vocab v = build_vocab(corpus, 1);
  ModelConfig cfg = toy_config();
  cfg.word_vocab_size = v.word_count();
  cfg.upos_vocab_size = v.upos_count();
  cfg.label_count = v.label_count();
  std::mt19937_64 rng(12);
  Parameters p = init_params(cfg, rng);

  std::vector<const Sentence*> ptrs = {&corpus[0], &corpus[1]};
  BatchIds b = make_batch(ptrs, v, true);
  Graph g;
  std::mt19937_64 drop_rng(1);
  EncoderGraph enc = build_encoder_graph(g, b, p, cfg, /*train_mode=*/false, drop_rng);
  BatchScores f = forward_batch(b, p, cfg);
  for (int s = 0; s < b.batch; ++s) {
    Graph::Var arc = arc_score_graph(g, enc, b, s, p);
    Tensor plain = arc_score_matrix(f, b, s, p);
    const Tensor& graph_val = g.value(arc);
    REQUIRE(graph_val.same_shape(plain));
    for (std::int64_t i = 0; i < plain.size(); ++i)
      CHECK(graph_val[i] == doctest::Approx(plain[i]).epsilon(1e-10));

    const Sentence& sent = *b.sents[static_cast<std::size_t>(s)];
    Graph::Var lab = label_score_graph(g, enc, b, s, sent.heads, p);
    Tensor plain_lab = label_scores_at(f, b, s, sent.heads, p);
    const Tensor& lab_val = g.value(lab);
    for (std::int64_t i = 0; i < plain_lab.size(); ++i)
      CHECK(lab_val[i] == doctest::Approx(plain_lab[i]).epsilon(1e-10));
  }
}

TEST_CASE("parsing a batch yields well-formed trees") {
  auto corpus = tiny_corpus();
  Vocab v = build_vocab(corpus, 1);
  ModelConfig cfg = toy_config();
  cfg.word_vocab_size = v.word_count();
  cfg.upos_vocab_size = v.upos_count();
  cfg.label_count = v.label_count();
  std::mt19937_64 rng(13);
  Parameters p = init_params(cfg, rng);
  auto trees = parse_batch({&corpus[0], &corpus[1]}, p, cfg, v, true);
  REQUIRE(trees.size() == 2);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    CHECK(is_tree(trees[i].heads));
    CHECK(trees[i].heads.size() == static_cast<std::size_t>(corpus[i].size()));
    int roots = 0;
    for (int h : trees[i].heads) roots += h == 0;
    CHECK(roots == 1);
    for (int l : trees[i].labels) {
      CHECK(l >= 0);
      CHECK(l < v.label_count());
    }
  }
}

TEST_CASE("model file round-trips bit-exact") {
  auto corpus = tiny_corpus();
  Vocab v = build_vocab(corpus, 1);
  ModelConfig cfg = toy_config();
  cfg.word_vocab_size = v.word_count();
  cfg.upos_vocab_size = v.upos_count();
  cfg.label_count = v.label_count();
  std::mt19937_64 rng(14);
  Parameters p = init_params(cfg, rng);

  const std::string path = "roundtrip_model.bin";
  save_model(p, cfg, v, path);
  LoadedModel m = load_model(path);
  std::remove(path.c_str());

  CHECK(m.config.word_dim == cfg.word_dim);
  CHECK(m.config.lstm_dim == cfg.lstm_dim);
  CHECK(m.config.label_count == cfg.label_count);
  CHECK(m.vocab.word_list() == v.word_list());
  CHECK(m.vocab.label_list() == v.label_list());
  REQUIRE(m.params.tensors.size() == p.tensors.size());
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    CHECK(m.params.tensors[i].name == p.tensors[i].name);
    REQUIRE(m.params.tensors[i].value.same_shape(p.tensors[i].value));
    for (std::int64_t j = 0; j < p.tensors[i].value.size(); ++j)
      CHECK(m.params.tensors[i].value[j] == p.tensors[i].value[j]);
  }
}

TEST_CASE("corrupt model files are rejected") {
  const std::string path = "bad_model.bin";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NOTAMODEL", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_model(path), ModelIOError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_model("does_not_exist.bin"), ModelIOError);
}
