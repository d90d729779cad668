#include "dparse/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dparse {

Graph::Var Graph::emplace(Tensor value, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Graph::Var Graph::input(Tensor val) { return emplace(std::move(val)); }

Graph::Var Graph::param(ParamTensor& p) {
  Var id = emplace(p.value);
  nodes_[static_cast<std::size_t>(id)].param = &p;
  return id;
}

Graph::Var Graph::matmul(Var a, Var b) {
  Tensor out({v(a).rows(), v(b).cols()});
  matmul_acc(v(a), v(b), out);
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, b, id] {
    matmul_nt_acc(g(id), v(b), g(a));  // dA = G B^T
    matmul_tn_acc(v(a), g(id), g(b));  // dB = A^T G
  };
  return id;
}

Graph::Var Graph::matmul_nt(Var a, Var b) {
  Tensor out({v(a).rows(), v(b).rows()});
  matmul_nt_acc(v(a), v(b), out);
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, b, id] {
    matmul_acc(g(id), v(b), g(a));     // dA = G B
    matmul_tn_acc(g(id), v(a), g(b));  // dB = G^T A
  };
  return id;
}

Graph::Var Graph::add(Var a, Var b) {
  if (!v(a).same_shape(v(b))) throw std::invalid_argument("add: shape mismatch");
  Tensor out = v(a);
  const Tensor& bb = v(b);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += bb[i];
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, b, id] {
    const Tensor& go = g(id);
    for (std::int64_t i = 0; i < go.size(); ++i) {
      g(a)[i] += go[i];
      g(b)[i] += go[i];
    }
  };
  return id;
}

Graph::Var Graph::add_row(Var m, Var vec) {
  const int r = v(m).rows(), c = v(m).cols();
  if (v(vec).size() != c) throw std::invalid_argument("add_row: width mismatch");
  Tensor out = v(m);
  const double* vd = v(vec).data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) += vd[j];
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, m, vec, id, r, c] {
    const Tensor& go = g(id);
    Tensor& gm = g(m);
    Tensor& gv = g(vec);
    for (std::int64_t i = 0; i < go.size(); ++i) gm[i] += go[i];
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) gv[j] += go.at(i, j);
  };
  return id;
}

Graph::Var Graph::mul(Var a, Var b) {
  if (!v(a).same_shape(v(b))) throw std::invalid_argument("mul: shape mismatch");
  Tensor out = v(a);
  const Tensor& bb = v(b);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= bb[i];
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, b, id] {
    const Tensor& go = g(id);
    for (std::int64_t i = 0; i < go.size(); ++i) {
      g(a)[i] += go[i] * v(b)[i];
      g(b)[i] += go[i] * v(a)[i];
    }
  };
  return id;
}

Graph::Var Graph::mul_col(Var m, Var vec) {
  const int r = v(m).rows(), c = v(m).cols();
  if (v(vec).size() != r) throw std::invalid_argument("mul_col: height mismatch");
  Tensor out = v(m);
  const double* vd = v(vec).data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) *= vd[i];
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, m, vec, id, r, c] {
    const Tensor& go = g(id);
    Tensor& gm = g(m);
    Tensor& gv = g(vec);
    for (int i = 0; i < r; ++i) {
      const double vi = v(vec)[i];
      double acc = 0.0;
      for (int j = 0; j < c; ++j) {
        gm.at(i, j) += go.at(i, j) * vi;
        acc += go.at(i, j) * v(m).at(i, j);
      }
      gv[i] += acc;
    }
  };
  return id;
}

Graph::Var Graph::sigmoid(Var a) {
  Tensor out = v(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id] {
    const Tensor& y = v(id);
    const Tensor& go = g(id);
    for (std::int64_t i = 0; i < go.size(); ++i)
      g(a)[i] += go[i] * y[i] * (1.0 - y[i]);
  };
  return id;
}

Graph::Var Graph::tanh(Var a) {
  Tensor out = v(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id] {
    const Tensor& y = v(id);
    const Tensor& go = g(id);
    for (std::int64_t i = 0; i < go.size(); ++i)
      g(a)[i] += go[i] * (1.0 - y[i] * y[i]);
  };
  return id;
}

Graph::Var Graph::relu(Var a) {
  Tensor out = v(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id] {
    const Tensor& go = g(id);
    for (std::int64_t i = 0; i < go.size(); ++i)
      if (v(a)[i] > 0.0) g(a)[i] += go[i];
  };
  return id;
}

Graph::Var Graph::concat_cols(Var a, Var b) {
  const int r = v(a).rows();
  if (v(b).rows() != r) throw std::invalid_argument("concat_cols: row mismatch");
  const int ca = v(a).cols(), cb = v(b).cols();
  Tensor out({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = v(a).at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = v(b).at(i, j);
  }
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, b, id, r, ca, cb] {
    const Tensor& go = g(id);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < ca; ++j) g(a).at(i, j) += go.at(i, j);
      for (int j = 0; j < cb; ++j) g(b).at(i, j) += go.at(i, ca + j);
    }
  };
  return id;
}

Graph::Var Graph::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  const int c = v(parts[0]).cols();
  int rtot = 0;
  for (Var p : parts) {
    if (v(p).cols() != c) throw std::invalid_argument("concat_rows: col mismatch");
    rtot += v(p).rows();
  }
  Tensor out({rtot, c});
  int off = 0;
  for (Var p : parts) {
    const Tensor& t = v(p);
    for (std::int64_t i = 0; i < t.size(); ++i)
      out[static_cast<std::int64_t>(off) * c + i] = t[i];
    off += t.rows();
  }
  Var id = emplace(std::move(out));
  std::vector<Var> ps = parts;
  nodes_.back().back = [this, ps, id, c] {
    const Tensor& go = g(id);
    int off2 = 0;
    for (Var p : ps) {
      Tensor& gp = g(p);
      for (std::int64_t i = 0; i < gp.size(); ++i)
        gp[i] += go[static_cast<std::int64_t>(off2) * c + i];
      off2 += gp.rows();
    }
  };
  return id;
}

Graph::Var Graph::slice_cols(Var a, int start, int len) {
  const int r = v(a).rows(), c = v(a).cols();
  if (start < 0 || len < 0 || start + len > c)
    throw std::invalid_argument("slice_cols: out of range");
  Tensor out({r, len});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j) out.at(i, j) = v(a).at(i, start + j);
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id, r, start, len] {
    const Tensor& go = g(id);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < len; ++j) g(a).at(i, start + j) += go.at(i, j);
  };
  return id;
}

Graph::Var Graph::select_rows(Var a, std::vector<int> idx) {
  const int r = v(a).rows(), c = v(a).cols();
  Tensor out({static_cast<int>(idx.size()), c});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= r)
      throw std::out_of_range("select_rows: index out of range");
    for (int j = 0; j < c; ++j) out.at(static_cast<int>(i), j) = v(a).at(idx[i], j);
  }
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id, idx = std::move(idx), c] {
    const Tensor& go = g(id);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < c; ++j) g(a).at(idx[i], j) += go.at(static_cast<int>(i), j);
  };
  return id;
}

Graph::Var Graph::log_softmax_rows(Var a) {
  Tensor out = v(a);
  log_softmax_rows_inplace(out);
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id] {
    // dx = g - softmax(x) * rowsum(g)
    const Tensor& y = v(id);
    const Tensor& go = g(id);
    const int r = y.rows(), c = y.cols();
    for (int i = 0; i < r; ++i) {
      double rs = 0.0;
      for (int j = 0; j < c; ++j) rs += go.at(i, j);
      for (int j = 0; j < c; ++j) {
        const double p = std::exp(y.at(i, j));
        g(a).at(i, j) += go.at(i, j) - p * rs;
      }
    }
  };
  return id;
}

Graph::Var Graph::pick(Var m, std::vector<int> col_ids) {
  const int r = v(m).rows(), c = v(m).cols();
  if (static_cast<int>(col_ids.size()) != r)
    throw std::invalid_argument("pick: one column id per row required");
  Tensor out({r});
  for (int i = 0; i < r; ++i) {
    if (col_ids[static_cast<std::size_t>(i)] < 0 || col_ids[static_cast<std::size_t>(i)] >= c)
      throw std::out_of_range("pick: column id out of range");
    out[i] = v(m).at(i, col_ids[static_cast<std::size_t>(i)]);
  }
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, m, id, ids = std::move(col_ids)] {
    const Tensor& go = g(id);
    for (std::size_t i = 0; i < ids.size(); ++i)
      g(m).at(static_cast<int>(i), ids[i]) += go[static_cast<std::int64_t>(i)];
  };
  return id;
}

Graph::Var Graph::sum(Var a) {
  double s = 0.0;
  for (std::int64_t i = 0; i < v(a).size(); ++i) s += v(a)[i];
  Var id = emplace(Tensor::scalar(s));
  nodes_.back().back = [this, a, id] {
    const double go = g(id)[0];
    for (std::int64_t i = 0; i < g(a).size(); ++i) g(a)[i] += go;
  };
  return id;
}

Graph::Var Graph::scale(Var a, double c) {
  Tensor out = v(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= c;
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, a, id, c] {
    const Tensor& go = g(id);
    for (std::int64_t i = 0; i < go.size(); ++i) g(a)[i] += c * go[i];
  };
  return id;
}

Graph::Var Graph::kl_const(Tensor teacher_probs, Var student_log) {
  const Tensor& q = v(student_log);
  if (!teacher_probs.same_shape(q))
    throw std::invalid_argument("kl_const: shape mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < q.size(); ++i) {
    const double p = teacher_probs[i];
    if (p > 0.0) s += p * (std::log(p) - q[i]);
  }
  Var id = emplace(Tensor::scalar(s));
  nodes_.back().back = [this, student_log, id, p = std::move(teacher_probs)] {
    const double go = g(id)[0];
    for (std::int64_t i = 0; i < p.size(); ++i)
      g(student_log)[i] -= go * p[i];
  };
  return id;
}

Graph::Var Graph::label_biaffine(Var dep, Var head, Var U, Var wdep, Var whead,
                                 Var bias) {
  const int n = v(dep).rows(), d = v(dep).cols();
  const int L = v(bias).size() ? v(bias).dim(0) : 0;
  if (v(head).rows() != n || v(head).cols() != d)
    throw std::invalid_argument("label_biaffine: dep/head mismatch");
  if (v(U).rank() != 3 || v(U).dim(0) != L || v(U).dim(1) != d || v(U).dim(2) != d)
    throw std::invalid_argument("label_biaffine: U shape");
  Tensor out({n, L});
  const double* Ud = v(U).data();
  for (int i = 0; i < n; ++i) {
    const double* di = v(dep).data() + static_cast<std::size_t>(i) * d;
    const double* hi = v(head).data() + static_cast<std::size_t>(i) * d;
    for (int k = 0; k < L; ++k) {
      const double* Uk = Ud + static_cast<std::size_t>(k) * d * d;
      double s = v(bias)[k];
      for (int a = 0; a < d; ++a) {
        const double* Uka = Uk + static_cast<std::size_t>(a) * d;
        double row = 0.0;
        for (int b = 0; b < d; ++b) row += Uka[b] * hi[b];
        s += di[a] * row;
        s += v(wdep).at(k, a) * di[a] + v(whead).at(k, a) * hi[a];
      }
      out.at(i, k) = s;
    }
  }
  Var id = emplace(std::move(out));
  nodes_.back().back = [this, dep, head, U, wdep, whead, bias, id, n, d, L] {
    const Tensor& go = g(id);
    const double* Ud = v(U).data();
    double* gU = g(U).data();
    for (int i = 0; i < n; ++i) {
      const double* di = v(dep).data() + static_cast<std::size_t>(i) * d;
      const double* hi = v(head).data() + static_cast<std::size_t>(i) * d;
      double* gdi = g(dep).data() + static_cast<std::size_t>(i) * d;
      double* ghi = g(head).data() + static_cast<std::size_t>(i) * d;
      for (int k = 0; k < L; ++k) {
        const double gik = go.at(i, k);
        if (gik == 0.0) continue;
        const double* Uk = Ud + static_cast<std::size_t>(k) * d * d;
        double* gUk = gU + static_cast<std::size_t>(k) * d * d;
        for (int a = 0; a < d; ++a) {
          const double* Uka = Uk + static_cast<std::size_t>(a) * d;
          double* gUka = gUk + static_cast<std::size_t>(a) * d;
          const double gd = gik * di[a];
          double hrow = 0.0;
          for (int b = 0; b < d; ++b) {
            hrow += Uka[b] * hi[b];
            ghi[b] += gd * Uka[b];
            gUka[b] += gd * hi[b];
          }
          gdi[a] += gik * (hrow + v(wdep).at(k, a));
          ghi[a] += gik * v(whead).at(k, a);
          g(wdep).at(k, a) += gik * di[a];
          g(whead).at(k, a) += gik * hi[a];
        }
        g(bias)[k] += gik;
      }
    }
  };
  return id;
}

void Graph::backward(Var loss) {
  if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
    throw std::invalid_argument("backward: bad loss node");
  if (v(loss).size() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  for (auto& n : nodes_) {
    n.grad = Tensor(n.value.shape());
  }
  g(loss)[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (static_cast<std::size_t>(loss) < i) continue;  // nodes after loss are unreachable
    if (nodes_[i].back) nodes_[i].back();
  }
  for (auto& n : nodes_) {
    if (n.param) {
      for (std::int64_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
    }
  }
}

std::pair<Graph::Var, Graph::Var> lstm_cell(Graph& g, Graph::Var x, Graph::Var h,
                                            Graph::Var c, const LstmWeights& w) {
  const int in = g.value(x).cols();
  const int hdim = g.value(h).cols();
  if (g.value(w.wx).rows() != in || g.value(w.wx).cols() != 4 * hdim ||
      g.value(w.wh).rows() != hdim || g.value(w.wh).cols() != 4 * hdim ||
      g.value(w.b).size() != 4 * hdim || g.value(c).cols() != hdim)
    throw std::invalid_argument("lstm_cell: weight dimensions inconsistent");
  Graph::Var gates = g.add_row(g.add(g.matmul(x, w.wx), g.matmul(h, w.wh)), w.b);
  Graph::Var gi = g.sigmoid(g.slice_cols(gates, 0, hdim));
  Graph::Var gf = g.sigmoid(g.slice_cols(gates, hdim, hdim));
  Graph::Var gc = g.tanh(g.slice_cols(gates, 2 * hdim, hdim));
  Graph::Var go = g.sigmoid(g.slice_cols(gates, 3 * hdim, hdim));
  Graph::Var c2 = g.add(g.mul(gf, c), g.mul(gi, gc));
  Graph::Var h2 = g.mul(go, g.tanh(c2));
  return {h2, c2};
}

}  // namespace dparse
