#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dparse/conllu.hpp"

namespace dparse {

/// Word/UPOS/label id maps with reserved ids. Unseen words map to UNK.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kRoot = 2;
  static constexpr int kReserved = 3;

  int word_id(const std::string& w) const;
  int upos_id(const std::string& t) const;
  int label_id(const std::string& l) const;  // throws if unknown
  int label_id_or(const std::string& l, int fallback) const noexcept;

  int word_count() const { return static_cast<int>(words_.size()) + kReserved; }
  int upos_count() const { return static_cast<int>(upos_.size()) + kReserved; }
  int label_count() const { return static_cast<int>(labels_.size()); }

  const std::string& label_name(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  std::int64_t word_freq(const std::string& w) const;

  // non-reserved entries in id order (word id = index + kReserved)
  const std::vector<std::string>& word_list() const { return words_; }
  const std::vector<std::string>& upos_list() const { return upos_; }
  const std::vector<std::string>& label_list() const { return labels_; }

  static Vocab from_lists(std::vector<std::string> words, std::vector<std::string> upos,
                          std::vector<std::string> labels);

  friend Vocab build_vocab(const std::vector<Sentence>& ts, int min_freq);

 private:
  std::unordered_map<std::string, int> word_ids_;
  std::unordered_map<std::string, int> upos_ids_;
  std::unordered_map<std::string, int> label_ids_;
  std::vector<std::string> words_, upos_, labels_;  // in id order (offset kReserved for words/upos)
  std::unordered_map<std::string, std::int64_t> freq_;
};

Vocab build_vocab(const std::vector<Sentence>& ts, int min_freq);

}  // namespace dparse
