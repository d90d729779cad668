#include "dparse/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace dparse {

int Vocab::word_id(const std::string& w) const {
  auto it = word_ids_.find(w);
  return it == word_ids_.end() ? kUnk : it->second;
}

int Vocab::upos_id(const std::string& t) const {
  auto it = upos_ids_.find(t);
  return it == upos_ids_.end() ? kUnk : it->second;
}

int Vocab::label_id(const std::string& l) const {
  auto it = label_ids_.find(l);
  if (it == label_ids_.end())
    throw std::out_of_range("unknown dependency label '" + l + "'");
  return it->second;
}

int Vocab::label_id_or(const std::string& l, int fallback) const noexcept {
  auto it = label_ids_.find(l);
  return it == label_ids_.end() ? fallback : it->second;
}

std::int64_t Vocab::word_freq(const std::string& w) const {
  auto it = freq_.find(w);
  return it == freq_.end() ? 0 : it->second;
}

Vocab Vocab::from_lists(std::vector<std::string> words, std::vector<std::string> upos,
                        std::vector<std::string> labels) {
  Vocab v;
  v.words_ = std::move(words);
  v.upos_ = std::move(upos);
  v.labels_ = std::move(labels);
  for (std::size_t i = 0; i < v.words_.size(); ++i)
    v.word_ids_[v.words_[i]] = kReserved + static_cast<int>(i);
  for (std::size_t i = 0; i < v.upos_.size(); ++i)
    v.upos_ids_[v.upos_[i]] = kReserved + static_cast<int>(i);
  for (std::size_t i = 0; i < v.labels_.size(); ++i)
    v.label_ids_[v.labels_[i]] = static_cast<int>(i);
  return v;
}

Vocab build_vocab(const std::vector<Sentence>& ts, int min_freq) {
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");
  Vocab v;
  // ordered maps so that id assignment is independent of hash order
  std::map<std::string, std::int64_t> wfreq;
  std::map<std::string, int> tags, labels;
  for (const auto& s : ts) {
    for (int i = 0; i < s.size(); ++i) {
      ++wfreq[s.tokens[i]];
      tags.emplace(s.upos[i], 0);
      labels.emplace(s.labels[i], 0);
    }
  }
  for (const auto& [w, f] : wfreq) {
    v.freq_[w] = f;
    if (f >= min_freq) {
      v.word_ids_[w] = Vocab::kReserved + static_cast<int>(v.words_.size());
      v.words_.push_back(w);
    }
  }
  for (const auto& [t, _] : tags) {
    v.upos_ids_[t] = Vocab::kReserved + static_cast<int>(v.upos_.size());
    v.upos_.push_back(t);
  }
  for (const auto& [l, _] : labels) {
    v.label_ids_[l] = static_cast<int>(v.labels_.size());
    v.labels_.push_back(l);
  }
  return v;
}

}  // namespace dparse
