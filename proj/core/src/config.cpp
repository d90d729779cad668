#include "dparse/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

namespace dparse {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigParseError("bad numeric value '" + v + "' for key '" + key + "'");
  }
  if (used != v.size())
    throw ConfigParseError("bad numeric value '" + v + "' for key '" + key + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigParseError("bad integer value '" + v + "' for key '" + key + "'");
  }
  if (used != v.size())
    throw ConfigParseError("bad integer value '" + v + "' for key '" + key + "'");
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ConfigParseError("bad integer value '" + v + "' for key '" + key + "'");
  }
  if (used != v.size())
    throw ConfigParseError("bad integer value '" + v + "' for key '" + key + "'");
  return x;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  // TrainingHyper fields
  if (key == "learning_rate") hyper.learning_rate = to_double(key, value);
  else if (key == "anneal_base") hyper.anneal_base = to_double(key, value);
  else if (key == "anneal_denom") hyper.anneal_denom = to_double(key, value);
  else if (key == "beta1") hyper.beta1 = to_double(key, value);
  else if (key == "beta2") hyper.beta2 = to_double(key, value);
  else if (key == "epsilon") hyper.epsilon = to_double(key, value);
  else if (key == "epochs") hyper.epochs = to_int(key, value);
  else if (key == "batch_size_sentences") hyper.batch_size_sentences = to_int(key, value);
  else if (key == "seed") hyper.seed = to_u64(key, value);
  else if (key == "temperature") hyper.temperature = to_double(key, value);
  else if (key == "early_stop_uas") hyper.early_stop_uas = to_double(key, value);
  // dropout rates live in both structs; keep them in sync
  else if (key == "emb_dropout") hyper.emb_dropout = model.emb_dropout = to_double(key, value);
  else if (key == "dropout") hyper.dropout = model.dropout = to_double(key, value);
  // ModelConfig fields
  else if (key == "word_dim") model.word_dim = to_int(key, value);
  else if (key == "upos_dim") model.upos_dim = to_int(key, value);
  else if (key == "lstm_dim") model.lstm_dim = to_int(key, value);
  else if (key == "lstm_layers") model.lstm_layers = to_int(key, value);
  else if (key == "arc_mlp_dim") model.arc_mlp_dim = to_int(key, value);
  else if (key == "label_mlp_dim") model.label_mlp_dim = to_int(key, value);
  else if (key == "mlp_layers") model.mlp_layers = to_int(key, value);
  else throw ConfigParseError("unknown config key '" + key + "'");
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigParseError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigParseError("line " + std::to_string(lineno) + ": expected key = value");
    try {
      base.set(key, value);
    } catch (const ConfigParseError& e) {
      throw ConfigParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

}  // namespace dparse
