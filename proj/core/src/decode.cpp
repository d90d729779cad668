#include "dparse/decode.hpp"

#include <limits>
#include <stdexcept>

namespace dparse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dense Chu-Liu/Edmonds over nodes 0..N-1 with 0 as root.
// s[h][d] is the score of arc h -> d. Returns head per node (heads[0]
// unused). Recursion contracts one cycle per level.
std::vector<int> cle_dense(std::vector<std::vector<double>> s) {
  const int n_nodes = static_cast<int>(s.size());
  std::vector<int> best(static_cast<std::size_t>(n_nodes), -1);
  for (int d = 1; d < n_nodes; ++d) {
    double bs = kNegInf;
    for (int h = 0; h < n_nodes; ++h) {
      if (h == d) continue;
      if (s[static_cast<std::size_t>(h)][static_cast<std::size_t>(d)] > bs) {
        bs = s[static_cast<std::size_t>(h)][static_cast<std::size_t>(d)];
        best[static_cast<std::size_t>(d)] = h;
      }
    }
    if (best[static_cast<std::size_t>(d)] < 0)
      throw std::invalid_argument("chu_liu_edmonds: node with no candidate head");
  }

  // find a cycle in the best-edge graph
  std::vector<int> state(static_cast<std::size_t>(n_nodes), 0);  // 0 unseen, 1 on path, 2 done
  state[0] = 2;
  std::vector<int> cycle;
  for (int start = 1; start < n_nodes && cycle.empty(); ++start) {
    if (state[static_cast<std::size_t>(start)]) continue;
    int cur = start;
    std::vector<int> path;
    while (cur != 0 && state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = best[static_cast<std::size_t>(cur)];
    }
    if (cur != 0 && state[static_cast<std::size_t>(cur)] == 1) {
      // walk the path back to cur to extract the cycle
      auto it = path.begin();
      while (*it != cur) ++it;
      cycle.assign(it, path.end());
    }
    for (int v : path) state[static_cast<std::size_t>(v)] = 2;
  }
  if (cycle.empty()) return best;

  std::vector<bool> in_cycle(static_cast<std::size_t>(n_nodes), false);
  for (int v : cycle) in_cycle[static_cast<std::size_t>(v)] = true;
  // contracted graph: root + outside nodes + one supernode (last index)
  std::vector<int> old_of;  // new index -> old index, supernode excluded
  std::vector<int> new_of(static_cast<std::size_t>(n_nodes), -1);
  for (int v = 0; v < n_nodes; ++v) {
    if (in_cycle[static_cast<std::size_t>(v)]) continue;
    new_of[static_cast<std::size_t>(v)] = static_cast<int>(old_of.size());
    old_of.push_back(v);
  }
  const int super = static_cast<int>(old_of.size());
  const int m = super + 1;

  std::vector<std::vector<double>> s2(static_cast<std::size_t>(m),
                                      std::vector<double>(static_cast<std::size_t>(m), kNegInf));
  // which cycle node the entering arc attaches to, per outside node
  std::vector<int> enter_at(static_cast<std::size_t>(m), -1);
  // which cycle node emits the leaving arc, per outside node
  std::vector<int> leave_from(static_cast<std::size_t>(m), -1);

  for (int v = 0; v < n_nodes; ++v) {
    if (in_cycle[static_cast<std::size_t>(v)]) continue;
    const int nv = new_of[static_cast<std::size_t>(v)];
    for (int u = 0; u < n_nodes; ++u) {
      if (in_cycle[static_cast<std::size_t>(u)]) continue;
      if (u == v) continue;
      s2[static_cast<std::size_t>(new_of[static_cast<std::size_t>(u)])]
        [static_cast<std::size_t>(nv)] = s[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
    }
    // v -> supernode: break the cycle at the best entry point
    for (int d : cycle) {
      const double w = s[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)] -
                       s[static_cast<std::size_t>(best[static_cast<std::size_t>(d)])]
                        [static_cast<std::size_t>(d)];
      if (w > s2[static_cast<std::size_t>(nv)][static_cast<std::size_t>(super)]) {
        s2[static_cast<std::size_t>(nv)][static_cast<std::size_t>(super)] = w;
        enter_at[static_cast<std::size_t>(nv)] = d;
      }
    }
    // supernode -> v
    if (v == 0) continue;
    for (int u : cycle) {
      if (s[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] >
          s2[static_cast<std::size_t>(super)][static_cast<std::size_t>(nv)]) {
        s2[static_cast<std::size_t>(super)][static_cast<std::size_t>(nv)] =
            s[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
        leave_from[static_cast<std::size_t>(nv)] = u;
      }
    }
  }
  std::vector<int> sub = cle_dense(std::move(s2));

  std::vector<int> heads(static_cast<std::size_t>(n_nodes), -1);
  const int entering = sub[static_cast<std::size_t>(super)];  // new index of the supernode's head
  const int broken = enter_at[static_cast<std::size_t>(entering)];
  for (int v : cycle)
    heads[static_cast<std::size_t>(v)] = best[static_cast<std::size_t>(v)];
  heads[static_cast<std::size_t>(broken)] = old_of[static_cast<std::size_t>(entering)];
  for (int nv = 0; nv < super; ++nv) {
    const int v = old_of[static_cast<std::size_t>(nv)];
    if (v == 0) continue;
    const int h = sub[static_cast<std::size_t>(nv)];
    heads[static_cast<std::size_t>(v)] =
        h == super ? leave_from[static_cast<std::size_t>(nv)] : old_of[static_cast<std::size_t>(h)];
  }
  return heads;
}

std::vector<std::vector<double>> to_head_major(const Tensor& arc_scores) {
  const int n = arc_scores.rows();
  const int m = n + 1;
  if (arc_scores.cols() != m)
    throw std::invalid_argument("arc score matrix must be n x (n+1)");
  std::vector<std::vector<double>> s(static_cast<std::size_t>(m),
                                     std::vector<double>(static_cast<std::size_t>(m), kNegInf));
  for (int d = 1; d <= n; ++d)
    for (int h = 0; h <= n; ++h)
      if (h != d) s[static_cast<std::size_t>(h)][static_cast<std::size_t>(d)] =
          arc_scores.at(d - 1, h);
  return s;
}

}  // namespace

double tree_score(const Tensor& arc_scores, const std::vector<int>& heads) {
  double total = 0.0;
  for (std::size_t i = 0; i < heads.size(); ++i)
    total += arc_scores.at(static_cast<int>(i), heads[i]);
  return total;
}

std::vector<int> chu_liu_edmonds(const Tensor& arc_scores, bool single_root) {
  const int n = arc_scores.rows();
  if (n == 0) throw std::invalid_argument("chu_liu_edmonds: empty sentence");
  if (n == 1) return {0};
  auto s = to_head_major(arc_scores);
  auto strip_root = [n](std::vector<int> node_heads) {
    std::vector<int> heads(static_cast<std::size_t>(n));
    for (int d = 1; d <= n; ++d) heads[static_cast<std::size_t>(d - 1)] = node_heads[static_cast<std::size_t>(d)];
    return heads;
  };
  if (!single_root) return strip_root(cle_dense(s));

  std::vector<int> best_heads;
  double best_score = kNegInf;
  for (int r = 1; r <= n; ++r) {
    if (s[0][static_cast<std::size_t>(r)] == kNegInf) continue;
    auto sr = s;
    for (int d = 1; d <= n; ++d)
      if (d != r) sr[0][static_cast<std::size_t>(d)] = kNegInf;
    std::vector<int> heads = strip_root(cle_dense(std::move(sr)));
    const double sc = tree_score(arc_scores, heads);
    if (sc > best_score) {
      best_score = sc;
      best_heads = std::move(heads);
    }
  }
  if (best_heads.empty())
    throw std::invalid_argument("chu_liu_edmonds: no feasible root candidate");
  return best_heads;
}

std::vector<int> greedy_heads(const Tensor& arc_scores) {
  const int n = arc_scores.rows();
  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    double bs = kNegInf;
    int bh = 0;
    for (int h = 0; h <= n; ++h) {
      if (h == i + 1) continue;
      if (arc_scores.at(i, h) > bs) {
        bs = arc_scores.at(i, h);
        bh = h;
      }
    }
    heads[static_cast<std::size_t>(i)] = bh;
  }
  return heads;
}

std::vector<int> assign_labels(const Tensor& label_scores, const std::vector<int>& heads) {
  if (label_scores.rank() != 3)
    throw std::invalid_argument("assign_labels: expected rank-3 scores");
  const int n = label_scores.dim(0), m = label_scores.dim(1), L = label_scores.dim(2);
  if (static_cast<int>(heads.size()) != n)
    throw std::invalid_argument("assign_labels: heads length mismatch");
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const int h = heads[static_cast<std::size_t>(i)];
    if (h < 0 || h >= m) throw std::out_of_range("assign_labels: head index out of range");
    const double* row = label_scores.data() +
                        (static_cast<std::size_t>(i) * m + h) * static_cast<std::size_t>(L);
    int bk = 0;
    for (int k = 1; k < L; ++k)
      if (row[k] > row[bk]) bk = k;
    labels[static_cast<std::size_t>(i)] = bk;
  }
  return labels;
}

}  // namespace dparse
