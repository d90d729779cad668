#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "dparse/model.hpp"
#include "dparse/trainer.hpp"

namespace dparse {

struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All user-settable knobs. Field names double as config file keys;
/// label_count/word_vocab_size/upos_vocab_size are derived from data
/// and are not settable here.
struct RunConfig {
  TrainingHyper hyper;
  ModelConfig model;

  /// Applies one "key = value" assignment. Unknown keys throw
  /// ConfigParseError.
  void set(const std::string& key, const std::string& value);
};

/// Flat "key = value" lines, '#' comments, blank lines ignored.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig parse_config_file(const std::string& path, RunConfig base = {});

}  // namespace dparse
