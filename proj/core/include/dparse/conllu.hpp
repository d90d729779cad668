#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace dparse {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One syntactic-word sentence. heads[i] is the 1-based position of the
/// head of token i+1, with 0 for the artificial ROOT.
struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> upos;
  std::vector<int> heads;
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(tokens.size()); }
};

/// True iff heads encodes a tree rooted at 0 (acyclic, every token
/// reaches ROOT, no self-loops).
bool is_tree(const std::vector<int>& heads);

/// Reads CoNLL-U. Multiword token ranges (1-2) and empty nodes (1.1)
/// are skipped. Throws ParseError with a line number on malformed
/// input or cyclic head structure.
std::vector<Sentence> parse_conllu(std::istream& in);
std::vector<Sentence> parse_conllu_file(const std::string& path);

/// Writes sentences back as CoNLL-U (FORM, UPOS, HEAD, DEPREL filled,
/// remaining columns "_").
void write_conllu(const std::vector<Sentence>& ts, std::ostream& out);

struct TreebankStats {
  std::int64_t tree_count = 0;
  double avg_sent_length = 0.0;
  double avg_arc_length = 0.0;  // non-root arcs only
  double nonproj_pct = 0.0;     // percent of non-root arcs that cross another arc
};

TreebankStats treebank_stats(const std::vector<Sentence>& ts);

/// Arc (h,d) strictly crosses (h2,d2): min1 < min2 < max1 < max2.
bool arcs_cross(int h1, int d1, int h2, int d2);

/// Single CSV row (with header) in Table-2 column order:
/// trees, avg sentence length, avg arc length, non-projective arc pct.
void write_stats_csv(const std::string& name, const TreebankStats& s, std::ostream& out);

}  // namespace dparse
