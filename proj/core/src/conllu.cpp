#include "dparse/conllu.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace dparse {

bool is_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n) return false;
    if (heads[i] == i + 1) return false;
  }
  // every token must reach ROOT without revisiting
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    int steps = 0;
    while (cur != 0) {
      cur = heads[cur - 1];
      if (++steps > n) return false;  // cycle
    }
  }
  return true;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void finish_sentence(Sentence& cur, std::vector<Sentence>& out, int line_no) {
  if (cur.tokens.empty()) return;
  if (!is_tree(cur.heads))
    throw ParseError("cyclic or ill-formed head structure in sentence ending at line " +
                     std::to_string(line_no));
  out.push_back(std::move(cur));
  cur = Sentence{};
}

}  // namespace

std::vector<Sentence> parse_conllu(std::istream& in) {
  std::vector<Sentence> out;
  Sentence cur;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish_sentence(cur, out, line_no);
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 10)
      throw ParseError("line " + std::to_string(line_no) + ": expected 10 columns, got " +
                       std::to_string(cols.size()));
    const std::string& id = cols[0];
    // skip multiword ranges (1-2) and empty nodes (1.1)
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
    int head;
    try {
      std::size_t used = 0;
      head = std::stoi(cols[6], &used);
      if (used != cols[6].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": non-integer HEAD '" +
                       cols[6] + "'");
    }
    if (head < 0)
      throw ParseError("line " + std::to_string(line_no) + ": negative HEAD");
    cur.tokens.push_back(cols[1]);
    cur.upos.push_back(cols[3]);
    cur.heads.push_back(head);
    cur.labels.push_back(cols[7]);
  }
  // out-of-range HEADs are caught by the tree check at sentence end
  finish_sentence(cur, out, line_no);
  return out;
}

std::vector<Sentence> parse_conllu_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_conllu(in);
}

void write_conllu(const std::vector<Sentence>& ts, std::ostream& out) {
  for (const auto& s : ts) {
    for (int i = 0; i < s.size(); ++i) {
      out << (i + 1) << '\t' << s.tokens[i] << "\t_\t" << s.upos[i]
          << "\t_\t_\t" << s.heads[i] << '\t' << s.labels[i] << "\t_\t_\n";
    }
    out << '\n';
  }
}

bool arcs_cross(int h1, int d1, int h2, int d2) {
  int a1 = std::min(h1, d1), b1 = std::max(h1, d1);
  int a2 = std::min(h2, d2), b2 = std::max(h2, d2);
  return (a1 < a2 && a2 < b1 && b1 < b2) || (a2 < a1 && a1 < b2 && b2 < b1);
}

TreebankStats treebank_stats(const std::vector<Sentence>& ts) {
  if (ts.empty()) throw std::invalid_argument("treebank_stats: empty treebank");
  TreebankStats st;
  st.tree_count = static_cast<std::int64_t>(ts.size());
  std::int64_t tokens = 0, arcs = 0, nonproj = 0;
  double arc_len_sum = 0.0;
  for (const auto& s : ts) {
    tokens += s.size();
    for (int i = 0; i < s.size(); ++i) {
      if (s.heads[i] == 0) continue;  // ROOT has no linear position
      ++arcs;
      arc_len_sum += std::abs((i + 1) - s.heads[i]);
      bool crossed = false;
      for (int j = 0; j < s.size() && !crossed; ++j) {
        if (j == i || s.heads[j] == 0) continue;
        crossed = arcs_cross(s.heads[i], i + 1, s.heads[j], j + 1);
      }
      if (crossed) ++nonproj;
    }
  }
  st.avg_sent_length = static_cast<double>(tokens) / static_cast<double>(ts.size());
  st.avg_arc_length = arcs ? arc_len_sum / static_cast<double>(arcs) : 0.0;
  st.nonproj_pct = arcs ? 100.0 * static_cast<double>(nonproj) / static_cast<double>(arcs) : 0.0;
  return st;
}

void write_stats_csv(const std::string& name, const TreebankStats& s, std::ostream& out) {
  // avg_arc_length and nonproj_pct are computed over non-root arcs only
  out << "treebank,trees,avg_sent_len,avg_arc_len,nonproj_pct\n";
  out << name << ',' << s.tree_count << ',' << s.avg_sent_length << ','
      << s.avg_arc_length << ',' << s.nonproj_pct << '\n';
}

}  // namespace dparse
