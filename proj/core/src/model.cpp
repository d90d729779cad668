#include "dparse/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace dparse {

void ModelConfig::validate() const {
  if (word_dim < 1 || upos_dim < 1 || lstm_dim < 1 || lstm_layers < 1 ||
      arc_mlp_dim < 1 || label_mlp_dim < 1 || mlp_layers < 1)
    throw std::invalid_argument("ModelConfig: all dimensions must be >= 1");
  if (lstm_dim % 2 != 0)
    throw std::invalid_argument("ModelConfig: lstm_dim must be even");
  if (emb_dropout < 0.0 || emb_dropout >= 1.0 || dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("ModelConfig: dropout rates must be in [0,1)");
  if (label_count < 1 || word_vocab_size < 1 || upos_vocab_size < 1)
    throw std::invalid_argument("ModelConfig: vocab/label sizes unset");
}

ParamTensor& Parameters::at(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end()) throw std::out_of_range("no parameter '" + name + "'");
  return tensors[it->second];
}

const ParamTensor& Parameters::at(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw std::out_of_range("no parameter '" + name + "'");
  return tensors[it->second];
}

void Parameters::add(const std::string& name, Tensor value) {
  index.emplace(name, tensors.size());
  tensors.emplace_back(name, std::move(value));
}

void Parameters::zero_grads() {
  for (auto& p : tensors) p.zero_grad();
}

std::vector<std::pair<std::string, std::vector<int>>> param_shapes(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, std::vector<int>>> out;
  const int hdim = cfg.lstm_dim / 2;
  const int L = cfg.label_count;
  out.emplace_back("word_emb", std::vector<int>{cfg.word_vocab_size, cfg.word_dim});
  out.emplace_back("upos_emb", std::vector<int>{cfg.upos_vocab_size, cfg.upos_dim});
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const int in = l == 0 ? cfg.word_dim + cfg.upos_dim : cfg.lstm_dim;
    for (const char* dir : {"fw", "bw"}) {
      const std::string base = "lstm.l" + std::to_string(l) + "." + dir;
      out.emplace_back(base + ".wx", std::vector<int>{in, 4 * hdim});
      out.emplace_back(base + ".wh", std::vector<int>{hdim, 4 * hdim});
      out.emplace_back(base + ".b", std::vector<int>{1, 4 * hdim});
    }
  }
  for (const auto& [prefix, width] :
       std::vector<std::pair<std::string, int>>{{"arc_dep", cfg.arc_mlp_dim},
                                                {"arc_head", cfg.arc_mlp_dim},
                                                {"lab_dep", cfg.label_mlp_dim},
                                                {"lab_head", cfg.label_mlp_dim}}) {
    for (int k = 0; k < cfg.mlp_layers; ++k) {
      const int in = k == 0 ? cfg.lstm_dim : width;
      const std::string base = prefix + ".l" + std::to_string(k);
      out.emplace_back(base + ".w", std::vector<int>{in, width});
      out.emplace_back(base + ".b", std::vector<int>{1, width});
    }
  }
  out.emplace_back("arc_U", std::vector<int>{cfg.arc_mlp_dim, cfg.arc_mlp_dim});
  out.emplace_back("arc_u", std::vector<int>{cfg.arc_mlp_dim, 1});
  out.emplace_back("lab_U", std::vector<int>{L, cfg.label_mlp_dim, cfg.label_mlp_dim});
  out.emplace_back("lab_wdep", std::vector<int>{L, cfg.label_mlp_dim});
  out.emplace_back("lab_whead", std::vector<int>{L, cfg.label_mlp_dim});
  out.emplace_back("lab_b", std::vector<int>{L});
  return out;
}

std::int64_t count_params(const ModelConfig& cfg) {
  std::int64_t total = 0;
  for (const auto& [name, shape] : param_shapes(cfg)) {
    (void)name;
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    total += n;
  }
  return total;
}

namespace {

bool is_bias(const std::string& name) {
  return name.size() >= 2 && (name.compare(name.size() - 2, 2, ".b") == 0 ||
                              name == "lab_b");
}

double init_bound(const std::string& name, const std::vector<int>& shape) {
  if (name == "word_emb" || name == "upos_emb")
    return 1.0 / std::sqrt(static_cast<double>(shape[1]));
  if (shape.size() == 3 || name == "lab_wdep" || name == "lab_whead")
    return 1.0 / std::sqrt(static_cast<double>(shape.back()));
  return 1.0 / std::sqrt(static_cast<double>(shape[0]));  // fan-in rows
}

}  // namespace

Parameters init_params(const ModelConfig& cfg, std::mt19937_64& rng) {
  Parameters p;
  for (const auto& [name, shape] : param_shapes(cfg)) {
    Tensor t(shape);
    if (!is_bias(name)) {
      const double bound = init_bound(name, shape);
      std::uniform_real_distribution<double> uni(-bound, bound);
      for (std::int64_t i = 0; i < t.size(); ++i) t[i] = uni(rng);
    }
    p.add(name, std::move(t));
  }
  return p;
}

namespace {

ModelConfig scaled_config(const ModelConfig& full, double alpha) {
  auto scaled = [alpha](int d) {
    return std::max(2, static_cast<int>(std::lround(alpha * d)));
  };
  ModelConfig c = full;
  c.word_dim = scaled(full.word_dim);
  c.upos_dim = scaled(full.upos_dim);
  int ld = scaled(full.lstm_dim);
  c.lstm_dim = ld % 2 ? ld + 1 : ld;
  c.arc_mlp_dim = scaled(full.arc_mlp_dim);
  c.label_mlp_dim = scaled(full.label_mlp_dim);
  return c;
}

}  // namespace

ModelConfig size_student(const ModelConfig& full, double target_fraction) {
  if (!(target_fraction > 0.0) || target_fraction > 1.0)
    throw std::invalid_argument("size_student: target_fraction must be in (0,1]");
  if (target_fraction == 1.0) return full;
  const double full_count = static_cast<double>(count_params(full));

  double lo = 0.0, hi = 1.0;
  ModelConfig best = scaled_config(full, 1.0);
  double best_err = std::abs(1.0 - target_fraction);
  for (int iter = 0; iter < 80; ++iter) {
    const double alpha = 0.5 * (lo + hi);
    ModelConfig c = scaled_config(full, alpha);
    const double frac = static_cast<double>(count_params(c)) / full_count;
    const double err = std::abs(frac - target_fraction);
    if (err < best_err) {
      best_err = err;
      best = c;
    }
    if (frac < target_fraction)
      lo = alpha;
    else
      hi = alpha;
  }
  if (best_err > 0.01) {
    const double achieved =
        static_cast<double>(count_params(best)) / full_count;
    throw SizingError("size_student: target fraction " + std::to_string(target_fraction) +
                      " unattainable; closest achievable is " + std::to_string(achieved));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Batch assembly

std::int64_t BatchIds::token_count() const {
  std::int64_t n = 0;
  for (int l : lengths) n += l;
  return n;
}

BatchIds make_batch(const std::vector<const Sentence*>& sents, const Vocab& vocab,
                    bool with_gold) {
  if (sents.empty()) throw std::invalid_argument("make_batch: empty batch");
  BatchIds b;
  b.sents = sents;
  b.batch = static_cast<int>(sents.size());
  for (const Sentence* s : sents) {
    b.lengths.push_back(s->size());
    b.max_len = std::max(b.max_len, s->size());
  }
  const int rows = (b.max_len + 1) * b.batch;
  b.word_ids.assign(static_cast<std::size_t>(rows), Vocab::kPad);
  b.upos_ids.assign(static_cast<std::size_t>(rows), Vocab::kPad);
  for (int s = 0; s < b.batch; ++s) {
    b.word_ids[static_cast<std::size_t>(b.row(0, s))] = Vocab::kRoot;
    b.upos_ids[static_cast<std::size_t>(b.row(0, s))] = Vocab::kRoot;
    for (int i = 0; i < sents[static_cast<std::size_t>(s)]->size(); ++i) {
      const Sentence& sent = *sents[static_cast<std::size_t>(s)];
      b.word_ids[static_cast<std::size_t>(b.row(i + 1, s))] = vocab.word_id(sent.tokens[static_cast<std::size_t>(i)]);
      b.upos_ids[static_cast<std::size_t>(b.row(i + 1, s))] = vocab.upos_id(sent.upos[static_cast<std::size_t>(i)]);
    }
  }
  if (with_gold) {
    for (const Sentence* sp : sents) {
      std::vector<int> ids;
      ids.reserve(sp->labels.size());
      for (const auto& l : sp->labels) ids.push_back(vocab.label_id(l));
      b.gold_labels.push_back(std::move(ids));
    }
  }
  return b;
}

namespace {

std::vector<int> step_ids(const std::vector<int>& ids, int t, int batch) {
  return std::vector<int>(ids.begin() + static_cast<std::ptrdiff_t>(t) * batch,
                          ids.begin() + static_cast<std::ptrdiff_t>(t + 1) * batch);
}

// valid-position column mask for step t: ROOT and tokens 1..len
Tensor step_mask(const BatchIds& b, int t, bool invert) {
  Tensor m({b.batch, 1});
  for (int s = 0; s < b.batch; ++s) {
    const bool valid = t <= b.lengths[static_cast<std::size_t>(s)];
    m[s] = (valid != invert) ? 1.0 : 0.0;
  }
  return m;
}

Tensor dropout_mask(const std::vector<int>& shape, double rate, std::mt19937_64& rng) {
  Tensor m(shape);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (std::int64_t i = 0; i < m.size(); ++i) m[i] = keep(rng) ? scale : 0.0;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Training-path forward

EncoderGraph build_encoder_graph(Graph& g, const BatchIds& b, Parameters& params,
                                 const ModelConfig& cfg, bool train_mode,
                                 std::mt19937_64& rng) {
  cfg.validate();
  const int T1 = b.max_len + 1;
  const int hdim = cfg.lstm_dim / 2;

  std::unordered_map<std::string, Graph::Var> cache;
  auto P = [&](const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    Graph::Var v = g.param(params.at(name));
    cache.emplace(name, v);
    return v;
  };

  for (int id : b.word_ids)
    if (id < 0 || id >= cfg.word_vocab_size)
      throw std::out_of_range("word id out of vocab range");
  for (int id : b.upos_ids)
    if (id < 0 || id >= cfg.upos_vocab_size)
      throw std::out_of_range("upos id out of vocab range");

  // embeddings per step
  std::vector<Graph::Var> seq;
  seq.reserve(static_cast<std::size_t>(T1));
  for (int t = 0; t < T1; ++t) {
    Graph::Var w = g.select_rows(P("word_emb"), step_ids(b.word_ids, t, b.batch));
    Graph::Var u = g.select_rows(P("upos_emb"), step_ids(b.upos_ids, t, b.batch));
    Graph::Var x = g.concat_cols(w, u);
    if (train_mode && cfg.emb_dropout > 0.0)
      x = g.mul(x, g.input(dropout_mask({b.batch, cfg.word_dim + cfg.upos_dim},
                                        cfg.emb_dropout, rng)));
    seq.push_back(x);
  }

  std::vector<Graph::Var> mask, inv_mask;
  for (int t = 0; t < T1; ++t) {
    mask.push_back(g.input(step_mask(b, t, false)));
    inv_mask.push_back(g.input(step_mask(b, t, true)));
  }

  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const std::string base = "lstm.l" + std::to_string(l) + ".";
    LstmWeights wf{P(base + "fw.wx"), P(base + "fw.wh"), P(base + "fw.b")};
    LstmWeights wb{P(base + "bw.wx"), P(base + "bw.wh"), P(base + "bw.b")};

    std::vector<Graph::Var> hf(static_cast<std::size_t>(T1)), hb(static_cast<std::size_t>(T1));
    Graph::Var h = g.input(Tensor({b.batch, hdim}));
    Graph::Var c = g.input(Tensor({b.batch, hdim}));
    for (int t = 0; t < T1; ++t) {
      auto [hn, cn] = lstm_cell(g, seq[static_cast<std::size_t>(t)], h, c, wf);
      h = g.add(g.mul_col(hn, mask[static_cast<std::size_t>(t)]),
                g.mul_col(h, inv_mask[static_cast<std::size_t>(t)]));
      c = g.add(g.mul_col(cn, mask[static_cast<std::size_t>(t)]),
                g.mul_col(c, inv_mask[static_cast<std::size_t>(t)]));
      hf[static_cast<std::size_t>(t)] = h;
    }
    h = g.input(Tensor({b.batch, hdim}));
    c = g.input(Tensor({b.batch, hdim}));
    for (int t = T1 - 1; t >= 0; --t) {
      auto [hn, cn] = lstm_cell(g, seq[static_cast<std::size_t>(t)], h, c, wb);
      h = g.add(g.mul_col(hn, mask[static_cast<std::size_t>(t)]),
                g.mul_col(h, inv_mask[static_cast<std::size_t>(t)]));
      c = g.add(g.mul_col(cn, mask[static_cast<std::size_t>(t)]),
                g.mul_col(c, inv_mask[static_cast<std::size_t>(t)]));
      hb[static_cast<std::size_t>(t)] = h;
    }
    for (int t = 0; t < T1; ++t) {
      Graph::Var out = g.concat_cols(hf[static_cast<std::size_t>(t)], hb[static_cast<std::size_t>(t)]);
      if (train_mode && cfg.dropout > 0.0)
        out = g.mul(out, g.input(dropout_mask({b.batch, cfg.lstm_dim}, cfg.dropout, rng)));
      seq[static_cast<std::size_t>(t)] = out;
    }
  }

  EncoderGraph enc;
  enc.ctx = g.concat_rows(seq);

  auto mlp = [&](const std::string& prefix, int width) {
    Graph::Var x = enc.ctx;
    for (int k = 0; k < cfg.mlp_layers; ++k) {
      const std::string base = prefix + ".l" + std::to_string(k);
      x = g.relu(g.add_row(g.matmul(x, P(base + ".w")), P(base + ".b")));
      if (train_mode && cfg.dropout > 0.0)
        x = g.mul(x, g.input(dropout_mask({(b.max_len + 1) * b.batch, width},
                                          cfg.dropout, rng)));
    }
    return x;
  };
  enc.arc_dep = mlp("arc_dep", cfg.arc_mlp_dim);
  enc.arc_head = mlp("arc_head", cfg.arc_mlp_dim);
  enc.lab_dep = mlp("lab_dep", cfg.label_mlp_dim);
  enc.lab_head = mlp("lab_head", cfg.label_mlp_dim);
  return enc;
}

namespace {

std::vector<int> dep_rows(const BatchIds& b, int s) {
  const int n = b.lengths[static_cast<std::size_t>(s)];
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) idx.push_back(b.row(i, s));
  return idx;
}

std::vector<int> head_rows(const BatchIds& b, int s) {
  const int n = b.lengths[static_cast<std::size_t>(s)];
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) idx.push_back(b.row(i, s));
  return idx;
}

}  // namespace

Graph::Var arc_score_graph(Graph& g, const EncoderGraph& enc, const BatchIds& b, int s,
                           Parameters& params) {
  Graph::Var dep = g.select_rows(enc.arc_dep, dep_rows(b, s));
  Graph::Var head = g.select_rows(enc.arc_head, head_rows(b, s));
  Graph::Var U = g.param(params.at("arc_U"));
  Graph::Var u = g.param(params.at("arc_u"));
  Graph::Var bil = g.matmul_nt(g.matmul(dep, U), head);
  Graph::Var head_bias = g.matmul(head, u);  // (n+1) x 1
  return g.add_row(bil, head_bias);
}

Graph::Var label_score_graph(Graph& g, const EncoderGraph& enc, const BatchIds& b, int s,
                             const std::vector<int>& heads, Parameters& params) {
  const int n = b.lengths[static_cast<std::size_t>(s)];
  if (static_cast<int>(heads.size()) != n)
    throw std::invalid_argument("label_score_graph: heads length mismatch");
  std::vector<int> hrows;
  hrows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (heads[static_cast<std::size_t>(i)] < 0 || heads[static_cast<std::size_t>(i)] > n)
      throw std::out_of_range("label_score_graph: head index out of range");
    hrows.push_back(b.row(heads[static_cast<std::size_t>(i)], s));
  }
  Graph::Var dep = g.select_rows(enc.lab_dep, dep_rows(b, s));
  Graph::Var head = g.select_rows(enc.lab_head, hrows);
  return g.label_biaffine(dep, head, g.param(params.at("lab_U")),
                          g.param(params.at("lab_wdep")), g.param(params.at("lab_whead")),
                          g.param(params.at("lab_b")));
}

// ---------------------------------------------------------------------------
// Inference-path forward

namespace {

Tensor select_rows_plain(const Tensor& m, const std::vector<int>& idx) {
  const int c = m.cols();
  Tensor out({static_cast<int>(idx.size()), c});
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::memcpy(out.data() + i * static_cast<std::size_t>(c),
                m.data() + static_cast<std::size_t>(idx[i]) * c,
                sizeof(double) * static_cast<std::size_t>(c));
  return out;
}

void sigmoid_inplace(double* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) x[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void tanh_inplace(double* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}

// one gated LSTM step over the batch, in place on h and c
void lstm_step_plain(const Tensor& x, Tensor& h, Tensor& c, const Tensor& wx,
                     const Tensor& wh, const Tensor& bias, const Tensor& msk) {
  const int batch = x.rows();
  const int hdim = h.cols();
  Tensor gates({batch, 4 * hdim});
  for (int i = 0; i < batch; ++i)
    std::memcpy(gates.data() + static_cast<std::size_t>(i) * 4 * hdim, bias.data(),
                sizeof(double) * static_cast<std::size_t>(4 * hdim));
  matmul_acc(x, wx, gates);
  matmul_acc(h, wh, gates);
  for (int i = 0; i < batch; ++i) {
    double* gr = gates.data() + static_cast<std::size_t>(i) * 4 * hdim;
    sigmoid_inplace(gr, hdim);
    sigmoid_inplace(gr + hdim, hdim);
    tanh_inplace(gr + 2 * hdim, hdim);
    sigmoid_inplace(gr + 3 * hdim, hdim);
    const double m = msk[i];
    double* hi = h.data() + static_cast<std::size_t>(i) * hdim;
    double* ci = c.data() + static_cast<std::size_t>(i) * hdim;
    for (int j = 0; j < hdim; ++j) {
      const double cn = gr[hdim + j] * ci[j] + gr[j] * gr[2 * hdim + j];
      const double hn = gr[3 * hdim + j] * std::tanh(cn);
      ci[j] = m * cn + (1.0 - m) * ci[j];
      hi[j] = m * hn + (1.0 - m) * hi[j];
    }
  }
}

Tensor mlp_plain(const Tensor& x0, const Parameters& params, const std::string& prefix,
                 int mlp_layers) {
  Tensor x = x0;
  for (int k = 0; k < mlp_layers; ++k) {
    const std::string base = prefix + ".l" + std::to_string(k);
    const Tensor& w = params.at(base + ".w").value;
    const Tensor& bias = params.at(base + ".b").value;
    Tensor y({x.rows(), w.cols()});
    for (int i = 0; i < y.rows(); ++i)
      std::memcpy(y.data() + static_cast<std::size_t>(i) * w.cols(), bias.data(),
                  sizeof(double) * static_cast<std::size_t>(w.cols()));
    matmul_acc(x, w, y);
    for (std::int64_t i = 0; i < y.size(); ++i)
      if (y[i] < 0.0) y[i] = 0.0;
    x = std::move(y);
  }
  return x;
}

}  // namespace

BatchScores forward_batch(const BatchIds& b, const Parameters& params,
                          const ModelConfig& cfg) {
  cfg.validate();
  const int T1 = b.max_len + 1;
  const int hdim = cfg.lstm_dim / 2;
  const Tensor& wemb = params.at("word_emb").value;
  const Tensor& uemb = params.at("upos_emb").value;

  std::vector<Tensor> seq;
  seq.reserve(static_cast<std::size_t>(T1));
  for (int t = 0; t < T1; ++t) {
    Tensor x({b.batch, cfg.word_dim + cfg.upos_dim});
    for (int s = 0; s < b.batch; ++s) {
      const int wid = b.word_ids[static_cast<std::size_t>(b.row(t, s))];
      const int uid = b.upos_ids[static_cast<std::size_t>(b.row(t, s))];
      std::memcpy(x.data() + static_cast<std::size_t>(s) * x.cols(),
                  wemb.data() + static_cast<std::size_t>(wid) * cfg.word_dim,
                  sizeof(double) * static_cast<std::size_t>(cfg.word_dim));
      std::memcpy(x.data() + static_cast<std::size_t>(s) * x.cols() + cfg.word_dim,
                  uemb.data() + static_cast<std::size_t>(uid) * cfg.upos_dim,
                  sizeof(double) * static_cast<std::size_t>(cfg.upos_dim));
    }
    seq.push_back(std::move(x));
  }

  std::vector<Tensor> masks;
  for (int t = 0; t < T1; ++t) masks.push_back(step_mask(b, t, false));

  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const std::string base = "lstm.l" + std::to_string(l) + ".";
    const Tensor& fwx = params.at(base + "fw.wx").value;
    const Tensor& fwh = params.at(base + "fw.wh").value;
    const Tensor& fb = params.at(base + "fw.b").value;
    const Tensor& bwx = params.at(base + "bw.wx").value;
    const Tensor& bwh = params.at(base + "bw.wh").value;
    const Tensor& bb = params.at(base + "bw.b").value;

    std::vector<Tensor> out(static_cast<std::size_t>(T1));
    for (int t = 0; t < T1; ++t) out[static_cast<std::size_t>(t)] = Tensor({b.batch, cfg.lstm_dim});

    Tensor h({b.batch, hdim}), c({b.batch, hdim});
    for (int t = 0; t < T1; ++t) {
      lstm_step_plain(seq[static_cast<std::size_t>(t)], h, c, fwx, fwh, fb,
                      masks[static_cast<std::size_t>(t)]);
      for (int s = 0; s < b.batch; ++s)
        std::memcpy(out[static_cast<std::size_t>(t)].data() + static_cast<std::size_t>(s) * cfg.lstm_dim,
                    h.data() + static_cast<std::size_t>(s) * hdim,
                    sizeof(double) * static_cast<std::size_t>(hdim));
    }
    h.fill(0.0);
    c.fill(0.0);
    for (int t = T1 - 1; t >= 0; --t) {
      lstm_step_plain(seq[static_cast<std::size_t>(t)], h, c, bwx, bwh, bb,
                      masks[static_cast<std::size_t>(t)]);
      for (int s = 0; s < b.batch; ++s)
        std::memcpy(out[static_cast<std::size_t>(t)].data() + static_cast<std::size_t>(s) * cfg.lstm_dim + hdim,
                    h.data() + static_cast<std::size_t>(s) * hdim,
                    sizeof(double) * static_cast<std::size_t>(hdim));
    }
    seq = std::move(out);
  }

  BatchScores f;
  f.ctx = Tensor({T1 * b.batch, cfg.lstm_dim});
  for (int t = 0; t < T1; ++t)
    std::memcpy(f.ctx.data() + static_cast<std::size_t>(t) * b.batch * cfg.lstm_dim,
                seq[static_cast<std::size_t>(t)].data(),
                sizeof(double) * static_cast<std::size_t>(b.batch) * cfg.lstm_dim);
  f.arc_dep = mlp_plain(f.ctx, params, "arc_dep", cfg.mlp_layers);
  f.arc_head = mlp_plain(f.ctx, params, "arc_head", cfg.mlp_layers);
  f.lab_dep = mlp_plain(f.ctx, params, "lab_dep", cfg.mlp_layers);
  f.lab_head = mlp_plain(f.ctx, params, "lab_head", cfg.mlp_layers);
  return f;
}

Tensor arc_score_matrix(const BatchScores& f, const BatchIds& b, int s,
                        const Parameters& params) {
  Tensor dep = select_rows_plain(f.arc_dep, dep_rows(b, s));
  Tensor head = select_rows_plain(f.arc_head, head_rows(b, s));
  Tensor bil = matmul(dep, params.at("arc_U").value);
  Tensor scores = matmul_nt(bil, head);
  Tensor hb = matmul(head, params.at("arc_u").value);  // (n+1) x 1
  for (int i = 0; i < scores.rows(); ++i)
    for (int j = 0; j < scores.cols(); ++j) scores.at(i, j) += hb[j];
  return scores;
}

namespace {

// s[i,k] for dep row i against a single head vector
void label_scores_row(const double* dep, const double* head, const Parameters& params,
                      int d, int L, double* out) {
  const Tensor& U = params.at("lab_U").value;
  const Tensor& wdep = params.at("lab_wdep").value;
  const Tensor& whead = params.at("lab_whead").value;
  const Tensor& bias = params.at("lab_b").value;
  for (int k = 0; k < L; ++k) {
    const double* Uk = U.data() + static_cast<std::size_t>(k) * d * d;
    double sum = bias[k];
    for (int a = 0; a < d; ++a) {
      const double* Uka = Uk + static_cast<std::size_t>(a) * d;
      double row = 0.0;
      for (int bcol = 0; bcol < d; ++bcol) row += Uka[bcol] * head[bcol];
      sum += dep[a] * row + wdep.at(k, a) * dep[a] + whead.at(k, a) * head[a];
    }
    out[k] = sum;
  }
}

}  // namespace

Tensor label_scores_at(const BatchScores& f, const BatchIds& b, int s,
                       const std::vector<int>& heads, const Parameters& params) {
  const int n = b.lengths[static_cast<std::size_t>(s)];
  const int d = f.lab_dep.cols();
  const int L = params.at("lab_b").value.dim(0);
  if (static_cast<int>(heads.size()) != n)
    throw std::invalid_argument("label_scores_at: heads length mismatch");
  Tensor out({n, L});
  for (int i = 0; i < n; ++i) {
    const int h = heads[static_cast<std::size_t>(i)];
    if (h < 0 || h > n) throw std::out_of_range("label_scores_at: head out of range");
    const double* dep = f.lab_dep.data() + static_cast<std::size_t>(b.row(i + 1, s)) * d;
    const double* head = f.lab_head.data() + static_cast<std::size_t>(b.row(h, s)) * d;
    label_scores_row(dep, head, params, d, L, out.data() + static_cast<std::size_t>(i) * L);
  }
  return out;
}

Tensor label_scores_full(const BatchScores& f, const BatchIds& b, int s,
                         const Parameters& params) {
  const int n = b.lengths[static_cast<std::size_t>(s)];
  const int d = f.lab_dep.cols();
  const int L = params.at("lab_b").value.dim(0);
  Tensor out({n, n + 1, L});
  for (int i = 0; i < n; ++i) {
    const double* dep = f.lab_dep.data() + static_cast<std::size_t>(b.row(i + 1, s)) * d;
    for (int h = 0; h <= n; ++h) {
      const double* head = f.lab_head.data() + static_cast<std::size_t>(b.row(h, s)) * d;
      label_scores_row(dep, head, params, d, L,
                       out.data() + (static_cast<std::size_t>(i) * (n + 1) + h) * L);
    }
  }
  return out;
}

ScoreBundle score_sentence(const Sentence& sent, const Parameters& params,
                           const ModelConfig& cfg, const Vocab& vocab,
                           bool with_full_labels) {
  BatchIds b = make_batch({&sent}, vocab);
  BatchScores f = forward_batch(b, params, cfg);
  ScoreBundle out;
  out.context = f.ctx;  // batch of one: rows already 0..n
  out.arc_scores = arc_score_matrix(f, b, 0, params);
  if (with_full_labels) out.label_scores = label_scores_full(f, b, 0, params);
  return out;
}

std::vector<DecodedTree> parse_batch(const std::vector<const Sentence*>& sents,
                                     const Parameters& params, const ModelConfig& cfg,
                                     const Vocab& vocab, bool single_root) {
  BatchIds b = make_batch(sents, vocab);
  BatchScores f = forward_batch(b, params, cfg);
  std::vector<DecodedTree> out;
  out.reserve(sents.size());
  for (int s = 0; s < b.batch; ++s) {
    DecodedTree t;
    Tensor arc = arc_score_matrix(f, b, s, params);
    t.heads = chu_liu_edmonds(arc, single_root);
    t.score = tree_score(arc, t.heads);
    Tensor ls = label_scores_at(f, b, s, t.heads, params);
    t.labels.resize(static_cast<std::size_t>(ls.rows()));
    for (int i = 0; i < ls.rows(); ++i) {
      int bk = 0;
      for (int k = 1; k < ls.cols(); ++k)
        if (ls.at(i, k) > ls.at(i, bk)) bk = k;
      t.labels[static_cast<std::size_t>(i)] = bk;
    }
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model file: magic, format version, config block, vocab block, named
// tensors with shape headers. Little-endian, documented in the README.

namespace {

constexpr char kMagic[8] = {'D', 'P', 'R', 'S', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ModelIOError("truncated model file");
  return v;
}
std::int64_t get_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ModelIOError("truncated model file");
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ModelIOError("truncated model file");
  return v;
}
std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw ModelIOError("truncated model file");
  return s;
}

void put_string_list(std::ostream& out, const std::vector<std::string>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (const auto& s : v) put_str(out, s);
}

std::vector<std::string> get_string_list(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(get_str(in));
  return v;
}

}  // namespace

void save_model(const Parameters& params, const ModelConfig& cfg, const Vocab& vocab,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelIOError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_i64(out, cfg.word_dim);
  put_i64(out, cfg.upos_dim);
  put_i64(out, cfg.lstm_dim);
  put_i64(out, cfg.lstm_layers);
  put_i64(out, cfg.arc_mlp_dim);
  put_i64(out, cfg.label_mlp_dim);
  put_i64(out, cfg.mlp_layers);
  put_f64(out, cfg.emb_dropout);
  put_f64(out, cfg.dropout);
  put_i64(out, cfg.label_count);
  put_i64(out, cfg.word_vocab_size);
  put_i64(out, cfg.upos_vocab_size);
  put_string_list(out, vocab.word_list());
  put_string_list(out, vocab.upos_list());
  put_string_list(out, vocab.label_list());
  put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& p : params.tensors) {
    put_str(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) put_i64(out, d);
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw ModelIOError("write failure on " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIOError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ModelIOError(path + ": not a model file (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw ModelIOError(path + ": unsupported format version " + std::to_string(version));
  LoadedModel m;
  m.config.word_dim = static_cast<int>(get_i64(in));
  m.config.upos_dim = static_cast<int>(get_i64(in));
  m.config.lstm_dim = static_cast<int>(get_i64(in));
  m.config.lstm_layers = static_cast<int>(get_i64(in));
  m.config.arc_mlp_dim = static_cast<int>(get_i64(in));
  m.config.label_mlp_dim = static_cast<int>(get_i64(in));
  m.config.mlp_layers = static_cast<int>(get_i64(in));
  m.config.emb_dropout = get_f64(in);
  m.config.dropout = get_f64(in);
  m.config.label_count = static_cast<int>(get_i64(in));
  m.config.word_vocab_size = static_cast<int>(get_i64(in));
  m.config.upos_vocab_size = static_cast<int>(get_i64(in));
  auto words = get_string_list(in);
  auto upos = get_string_list(in);
  auto labels = get_string_list(in);
  m.vocab = Vocab::from_lists(std::move(words), std::move(upos), std::move(labels));
  const std::uint32_t count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_str(in);
    const std::uint32_t rank = get_u32(in);
    std::vector<int> shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<int>(get_i64(in)));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw ModelIOError(path + ": truncated tensor data");
    m.params.add(name, std::move(t));
  }
  return m;
}

}  // namespace dparse
