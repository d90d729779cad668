#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dparse/bench.hpp"
#include "dparse/config.hpp"
#include "dparse/conllu.hpp"
#include "dparse/embeddings.hpp"
#include "dparse/eval.hpp"
#include "dparse/model.hpp"
#include "dparse/trainer.hpp"
#include "dparse/vocab.hpp"

namespace {

using namespace dparse;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::uint64_t seed = 1;
  bool seed_given = false;
  int batch_size = 0;  // 0 = keep config value
};

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig rc;
  if (!o.config_path.empty()) rc = parse_config_file(o.config_path, rc);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigParseError("override '" + kv + "' is not key=value");
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed_given) rc.hyper.seed = o.seed;
  if (o.batch_size > 0) rc.hyper.batch_size_sentences = o.batch_size;
  return rc;
}

std::string fraction_tag(char kind, double fraction) {
  if (fraction == 1.0) return "Full";
  std::ostringstream s;
  s << kind << '-' << static_cast<int>(std::lround(fraction * 100.0));
  return s.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  return f;
}

void write_history(const TrainResult& res, const std::string& model_path) {
  auto f = open_out(model_path + ".history.csv");
  write_history_csv(res.history, f);
}

void report_training(const TrainResult& res, const std::string& tag) {
  std::cerr << tag << ": " << count_params(res.config) << " parameters";
  if (res.best_epoch > 0) {
    const auto& r = res.history[static_cast<std::size_t>(res.best_epoch - 1)];
    std::cerr << ", best epoch " << res.best_epoch << " dev UAS " << r.dev_uas
              << " LAS " << r.dev_las;
  }
  std::cerr << '\n';
}

std::vector<DecodedTree> parse_all(const std::vector<Sentence>& data,
                                   const LoadedModel& m, int batch_size,
                                   bool single_root) {
  std::vector<DecodedTree> trees;
  trees.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); i += static_cast<std::size_t>(batch_size)) {
    std::vector<const Sentence*> chunk;
    const std::size_t end =
        std::min(data.size(), i + static_cast<std::size_t>(batch_size));
    for (std::size_t j = i; j < end; ++j) chunk.push_back(&data[j]);
    auto out = parse_batch(chunk, m.params, m.config, m.vocab, single_root);
    for (auto& t : out) trees.push_back(std::move(t));
  }
  return trees;
}

int run(int argc, char** argv) {
  CLI::App app{"Biaffine dependency parser with teacher-student distillation"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string out_path, teacher_path, embeddings_path;
  std::string train_path, dev_path, model_path, data_path;
  std::vector<std::string> data_paths;
  double fraction = 1.0;
  int runs = 5;
  std::string batch_sizes_arg = "1,16,64,256";
  bool include_punct = true, single_root = true;
  std::string tag = "Full";

  auto add_common = [&](CLI::App* c, bool training) {
    c->add_option("--config", common.config_path, "key = value config file");
    c->add_option("--set", common.overrides, "config override key=value (repeatable)");
    auto* s = c->add_option("--seed", common.seed, "RNG seed");
    s->each([&](const std::string&) { common.seed_given = true; });
    if (training)
      c->add_option("--batch-size", common.batch_size, "training batch size in sentences");
  };

  auto* train_cmd = app.add_subcommand("train", "train a baseline parser");
  train_cmd->add_option("train_conllu", train_path, "training treebank")->required();
  train_cmd->add_option("dev_conllu", dev_path, "development treebank");
  add_common(train_cmd, true);
  train_cmd->add_option("--fraction", fraction, "parameter fraction of the full config")
      ->check(CLI::Range(1e-9, 1.0));
  train_cmd->add_option("--embeddings", embeddings_path, "pretrained word embeddings, text format");
  train_cmd->add_option("--out", out_path, "model file to write")->required();

  auto* distill_cmd = app.add_subcommand("distill", "distill a trained teacher into a student");
  distill_cmd->add_option("train_conllu", train_path, "training treebank")->required();
  distill_cmd->add_option("dev_conllu", dev_path, "development treebank");
  add_common(distill_cmd, true);
  distill_cmd->add_option("--teacher", teacher_path, "teacher model file")->required();
  distill_cmd->add_option("--fraction", fraction, "student parameter fraction of the teacher")
      ->check(CLI::Range(1e-9, 1.0))
      ->required();
  distill_cmd->add_option("--out", out_path, "model file to write")->required();

  auto* parse_cmd = app.add_subcommand("parse", "parse CoNLL-U input with a trained model");
  parse_cmd->add_option("model", model_path, "model file")->required();
  parse_cmd->add_option("conllu", data_path, "input treebank")->required();
  add_common(parse_cmd, false);
  parse_cmd->add_option("--batch-size", common.batch_size, "inference batch size");
  parse_cmd->add_option("--single-root", single_root, "restrict ROOT to a single dependent");
  parse_cmd->add_option("--out", out_path, "output file (default stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "score a model against a gold treebank");
  eval_cmd->add_option("model", model_path, "model file")->required();
  eval_cmd->add_option("conllu", data_path, "gold treebank")->required();
  add_common(eval_cmd, false);
  eval_cmd->add_option("--batch-size", common.batch_size, "inference batch size");
  eval_cmd->add_option("--include-punct", include_punct, "count PUNCT tokens");
  eval_cmd->add_option("--single-root", single_root, "restrict ROOT to a single dependent");
  eval_cmd->add_option("--tag", tag, "model tag for the CSV row");
  eval_cmd->add_option("--out", out_path, "also write a model_tag,treebank,uas,las CSV row");

  auto* bench_cmd = app.add_subcommand("bench", "single-core throughput benchmark");
  bench_cmd->add_option("model", model_path, "model file")->required();
  bench_cmd->add_option("conllu", data_path, "treebank to parse")->required();
  add_common(bench_cmd, false);
  bench_cmd->add_option("--batch-sizes", batch_sizes_arg, "comma-separated batch sizes");
  bench_cmd->add_option("--runs", runs, "timed passes per batch size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--single-root", single_root, "restrict ROOT to a single dependent");
  bench_cmd->add_option("--tag", tag, "model tag for the CSV rows");
  bench_cmd->add_option("--out", out_path, "CSV output file (default stdout)");

  auto* stats_cmd = app.add_subcommand("stats", "treebank statistics as CSV");
  stats_cmd->add_option("conllu", data_paths, "treebank files")->required();
  stats_cmd->add_option("--out", out_path, "CSV output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*train_cmd) {
    RunConfig rc = resolve_config(common);
    auto train_data = parse_conllu_file(train_path);
    std::vector<Sentence> dev_data;
    if (!dev_path.empty()) dev_data = parse_conllu_file(dev_path);
    Vocab vocab = build_vocab(train_data, 1);
    ModelConfig cfg = rc.model;
    cfg.label_count = vocab.label_count();
    cfg.word_vocab_size = vocab.word_count();
    cfg.upos_vocab_size = vocab.upos_count();
    if (fraction < 1.0) cfg = size_student(cfg, fraction);
    const Tensor* pretrained = nullptr;
    Tensor emb;
    if (!embeddings_path.empty()) {
      std::ifstream f(embeddings_path);
      if (!f) throw std::runtime_error("cannot open '" + embeddings_path + "'");
      std::mt19937_64 rng(rc.hyper.seed);
      auto loaded = load_embeddings(f, vocab, cfg.word_dim, rng);
      std::cerr << "embedding coverage " << 100.0 * loaded.coverage << "%\n";
      emb = std::move(loaded.matrix);
      pretrained = &emb;
    }
    TrainResult res = train_baseline(cfg, train_data, dev_data, vocab, rc.hyper, pretrained);
    save_model(res.params, res.config, vocab, out_path);
    write_history(res, out_path);
    report_training(res, fraction_tag('B', fraction));
    return 0;
  }

  if (*distill_cmd) {
    RunConfig rc = resolve_config(common);
    LoadedModel teacher = load_model(teacher_path);
    auto train_data = parse_conllu_file(train_path);
    std::vector<Sentence> dev_data;
    if (!dev_path.empty()) dev_data = parse_conllu_file(dev_path);
    ModelConfig student_cfg = size_student(teacher.config, fraction);
    // an identity-sized student starts from the teacher's weights
    const Parameters* init = fraction == 1.0 ? &teacher.params : nullptr;
    TrainResult res = train_distilled(teacher.params, teacher.config, teacher.vocab,
                                      student_cfg, train_data, dev_data, rc.hyper, init);
    save_model(res.params, res.config, teacher.vocab, out_path);
    write_history(res, out_path);
    report_training(res, fraction_tag('D', fraction));
    return 0;
  }

  if (*parse_cmd) {
    LoadedModel m = load_model(model_path);
    auto data = parse_conllu_file(data_path);
    const int bs = common.batch_size > 0 ? common.batch_size : 64;
    auto trees = parse_all(data, m, bs, single_root);
    std::vector<Sentence> out = data;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].heads = trees[i].heads;
      for (int t = 0; t < out[i].size(); ++t)
        out[i].labels[static_cast<std::size_t>(t)] =
            m.vocab.label_name(trees[i].labels[static_cast<std::size_t>(t)]);
    }
    if (out_path.empty()) {
      write_conllu(out, std::cout);
    } else {
      auto f = open_out(out_path);
      write_conllu(out, f);
    }
    return 0;
  }

  if (*eval_cmd) {
    LoadedModel m = load_model(model_path);
    auto data = parse_conllu_file(data_path);
    const int bs = common.batch_size > 0 ? common.batch_size : 64;
    auto trees = parse_all(data, m, bs, single_root);
    std::vector<EvalPair> pairs;
    for (std::size_t i = 0; i < data.size(); ++i)
      pairs.push_back({&data[i], std::move(trees[i])});
    AttachmentScores s = uas_las(pairs, m.vocab, include_punct);
    std::cout << "UAS " << s.uas << " LAS " << s.las << '\n';
    if (!out_path.empty()) {
      auto f = open_out(out_path);
      emit_csv(std::vector<EvalRow>{{tag, data_path, s}}, f);
    }
    return 0;
  }

  if (*bench_cmd) {
    LoadedModel m = load_model(model_path);
    auto data = parse_conllu_file(data_path);
    std::vector<int> batch_sizes;
    std::stringstream ss(batch_sizes_arg);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) batch_sizes.push_back(std::stoi(item));
    if (batch_sizes.empty()) throw std::runtime_error("empty --batch-sizes list");
    auto records = bench_speed(m.params, m.config, m.vocab, data, tag, batch_sizes,
                               runs, single_root);
    if (out_path.empty()) {
      emit_csv(records, std::cout);
    } else {
      auto f = open_out(out_path);
      emit_csv(records, f);
    }
    print_summary_table(summarize(records), std::cerr);
    return 0;
  }

  if (*stats_cmd) {
    std::ostringstream csv;
    csv << "treebank,trees,avg_sent_len,avg_arc_len,nonproj_pct\n";
    for (const auto& path : data_paths) {
      TreebankStats s = treebank_stats(parse_conllu_file(path));
      csv << path << ',' << s.tree_count << ',' << s.avg_sent_length << ','
          << s.avg_arc_length << ',' << s.nonproj_pct << '\n';
    }
    if (out_path.empty()) {
      std::cout << csv.str();
    } else {
      auto f = open_out(out_path);
      f << csv.str();
    }
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
