#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "dparse/autodiff.hpp"
#include "dparse/conllu.hpp"
#include "dparse/decode.hpp"
#include "dparse/vocab.hpp"

namespace dparse {

struct ModelConfig {
  int word_dim = 100;
  int upos_dim = 100;
  int lstm_dim = 400;  // total across both directions
  int lstm_layers = 3;
  int arc_mlp_dim = 500;
  int label_mlp_dim = 100;
  int mlp_layers = 1;
  double emb_dropout = 0.33;
  double dropout = 0.33;
  int label_count = 0;
  int word_vocab_size = 0;
  int upos_vocab_size = 0;

  void validate() const;
};

/// Named tensor collection; iteration order is fixed by construction so
/// serialization and optimizer state stay aligned.
struct Parameters {
  std::vector<ParamTensor> tensors;
  std::unordered_map<std::string, std::size_t> index;

  ParamTensor& at(const std::string& name);
  const ParamTensor& at(const std::string& name) const;
  void add(const std::string& name, Tensor value);
  void zero_grads();
};

/// Shapes of every tensor in Parameters for this config, in order.
std::vector<std::pair<std::string, std::vector<int>>> param_shapes(const ModelConfig& cfg);

std::int64_t count_params(const ModelConfig& cfg);

/// Uniform +-1/sqrt(fan-in) weights, zero biases.
Parameters init_params(const ModelConfig& cfg, std::mt19937_64& rng);

struct SizingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scales word/upos/lstm/mlp dimensions by a common factor so that the
/// parameter count lands within 1 percentage point of target_fraction
/// of the full config. Layer counts and vocab sizes are unchanged.
ModelConfig size_student(const ModelConfig& full, double target_fraction);

// ---------------------------------------------------------------------------
// Batched inputs

/// Padded id tensors for a batch, time-major: entry for position t of
/// sentence s lives at index t*batch + s. Position 0 is ROOT.
struct BatchIds {
  std::vector<int> word_ids;  // (T+1) * batch
  std::vector<int> upos_ids;
  std::vector<int> lengths;   // tokens per sentence
  std::vector<std::vector<int>> gold_labels;  // per sentence, only with_gold
  std::vector<const Sentence*> sents;
  int batch = 0;
  int max_len = 0;  // T, max token count

  int row(int pos, int s) const { return pos * batch + s; }
  std::int64_t token_count() const;
};

/// with_gold additionally resolves DEPREL strings to label ids (throws
/// on labels missing from the vocab).
BatchIds make_batch(const std::vector<const Sentence*>& sents, const Vocab& vocab,
                    bool with_gold = false);

// ---------------------------------------------------------------------------
// Training-path forward (autodiff graph)

struct EncoderGraph {
  Graph::Var ctx;  // ((T+1)*batch) x lstm_dim
  Graph::Var arc_dep, arc_head;   // MLP outputs over all rows
  Graph::Var lab_dep, lab_head;
};

/// Builds the embedding -> BiLSTM -> MLP part of the network on the
/// tape. With train_mode, inverted-dropout masks are drawn from rng at
/// the config's rates.
EncoderGraph build_encoder_graph(Graph& g, const BatchIds& b, Parameters& params,
                                 const ModelConfig& cfg, bool train_mode,
                                 std::mt19937_64& rng);

/// n x (n+1) arc scores for sentence s of the batch (deep biaffine with
/// head-bias term).
Graph::Var arc_score_graph(Graph& g, const EncoderGraph& enc, const BatchIds& b, int s,
                           Parameters& params);

/// n x L label scores for sentence s with each token conditioned on
/// heads[i] (0 = ROOT).
Graph::Var label_score_graph(Graph& g, const EncoderGraph& enc, const BatchIds& b, int s,
                             const std::vector<int>& heads, Parameters& params);

// ---------------------------------------------------------------------------
// Inference-path forward (tape-free; used by parse/eval/bench and the
// teacher inside distillation)

struct BatchScores {
  Tensor ctx;                      // ((T+1)*batch) x lstm_dim
  Tensor arc_dep, arc_head, lab_dep, lab_head;
};

BatchScores forward_batch(const BatchIds& b, const Parameters& params,
                          const ModelConfig& cfg);

Tensor arc_score_matrix(const BatchScores& f, const BatchIds& b, int s,
                        const Parameters& params);
Tensor label_scores_at(const BatchScores& f, const BatchIds& b, int s,
                       const std::vector<int>& heads, const Parameters& params);  // n x L
Tensor label_scores_full(const BatchScores& f, const BatchIds& b, int s,
                         const Parameters& params);  // {n, n+1, L}

/// Per-sentence score bundle (context vectors, arc matrix, optionally
/// the full label tensor).
struct ScoreBundle {
  Tensor context;       // (n+1) x lstm_dim
  Tensor arc_scores;    // n x (n+1)
  Tensor label_scores;  // {n, n+1, L} when requested, else empty
};

ScoreBundle score_sentence(const Sentence& sent, const Parameters& params,
                           const ModelConfig& cfg, const Vocab& vocab,
                           bool with_full_labels);

/// Full decode of a batch: arc scores -> Chu-Liu/Edmonds -> labels at
/// the predicted heads.
std::vector<DecodedTree> parse_batch(const std::vector<const Sentence*>& sents,
                                     const Parameters& params, const ModelConfig& cfg,
                                     const Vocab& vocab, bool single_root);

// ---------------------------------------------------------------------------
// Model file

struct ModelIOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_model(const Parameters& params, const ModelConfig& cfg, const Vocab& vocab,
                const std::string& path);

struct LoadedModel {
  Parameters params;
  ModelConfig config;
  Vocab vocab;
};

LoadedModel load_model(const std::string& path);

}  // namespace dparse
