#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dparse/tensor.hpp"

namespace dparse {

/// A named trainable tensor together with its gradient accumulator.
struct ParamTensor {
  std::string name;
  Tensor value;
  Tensor grad;

  ParamTensor() = default;
  ParamTensor(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Reverse-mode tape. One Graph is built per forward pass (per batch);
/// node order is topological by construction.
class Graph {
 public:
  using Var = int;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Tensor v);
  Var param(ParamTensor& p);

  Var matmul(Var a, Var b);     // (m x k)(k x n)
  Var matmul_nt(Var a, Var b);  // (m x k)(n x k)^T
  Var add(Var a, Var b);        // same shape
  Var add_row(Var m, Var v);    // broadcast row vector over rows
  Var mul(Var a, Var b);        // elementwise
  Var mul_col(Var m, Var v);    // broadcast column vector over cols
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var concat_cols(Var a, Var b);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var a, int start, int len);
  Var select_rows(Var a, std::vector<int> idx);
  Var log_softmax_rows(Var a);
  Var pick(Var m, std::vector<int> col_ids);  // out[i] = m[i, col_ids[i]]
  Var sum(Var a);
  Var scale(Var a, double c);

  /// sum_{ik} P_ik (ln P_ik - qlog_ik), teacher rows P held constant.
  Var kl_const(Tensor teacher_probs, Var student_log);

  /// s[i,k] = dep_i.U_k.head_i + wdep_k.dep_i + whead_k.head_i + b_k
  /// dep, head: n x d; U: {L,d,d}; wdep, whead: {L,d}; bias: {L}.
  Var label_biaffine(Var dep, Var head, Var U, Var wdep, Var whead, Var bias);

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }
  const Tensor& grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }

  /// Reverse sweep from a scalar loss node; accumulates into every
  /// ParamTensor::grad reachable from it. Parameters not on a path to
  /// the loss keep whatever is in their accumulator (zero if cleared).
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;  // may be empty (leaf)
    ParamTensor* param = nullptr;
  };

  Var emplace(Tensor value, std::function<void()> back = {});
  Tensor& g(Var v) { return nodes_[static_cast<std::size_t>(v)].grad; }
  const Tensor& v(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }

  std::vector<Node> nodes_;
};

/// Weights of one LSTM direction/layer. wx: in x 4H, wh: H x 4H, b: 1 x 4H.
/// Gate column layout: [input, forget, candidate, output].
struct LstmWeights {
  Graph::Var wx, wh, b;
};

/// One step of a standard LSTM over a batch of rows.
/// x: B x in, h: B x H, c: B x H. Returns (h', c').
std::pair<Graph::Var, Graph::Var> lstm_cell(Graph& g, Graph::Var x, Graph::Var h,
                                            Graph::Var c, const LstmWeights& w);

}  // namespace dparse
