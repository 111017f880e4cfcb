// Command-line driver: train/eval/predict/score/synth/ablate experiments
// over the R-BERT relation classifier.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rbert/config.hpp"
#include "rbert/model.hpp"
#include "rbert/scorer.hpp"
#include "rbert/semeval.hpp"
#include "rbert/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::string gold_path;
  std::string pred_path;
  std::string checkpoint_path;
  std::string variant;
  long seed = -1;  // -1 = take from config
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rbert::data_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rbert::data_error("cannot open file for writing: " + path);
  out << content;
  if (!out) throw rbert::data_error("write failed: " + path);
}

struct Experiment {
  rbert::TrainConfig train_cfg;
  rbert::LabelSpace space{9};
  rbert::Vocab vocab;
  std::vector<rbert::EncodedExample> train_data;
  std::vector<rbert::EncodedExample> test_data;
  std::vector<rbert::RelationInstance> test_instances;
};

// Loads config + dataset files and encodes per the configured variant.
Experiment load_experiment(const CommonArgs& args, bool need_train,
                           bool need_test) {
  rbert::ConfigView cfg(rbert::load_config_file(args.config_path));
  Experiment exp;
  exp.train_cfg = rbert::train_config_from(cfg);
  if (args.seed >= 0) {
    exp.train_cfg.seed = static_cast<std::uint64_t>(args.seed);
  }
  if (!args.variant.empty()) {
    exp.train_cfg.variant = rbert::parse_variant(args.variant);
  }
  int num_families =
      static_cast<int>(cfg.integer("num_families", 9));
  exp.space = rbert::LabelSpace(num_families);

  std::string vocab_file = cfg.str("vocab_file");
  std::vector<rbert::RelationInstance> train_insts;
  if (need_train || vocab_file.empty()) {
    std::string train_file = cfg.str("train_file");
    if (train_file.empty()) {
      throw rbert::data_error("config: train_file is required");
    }
    train_insts = rbert::load_dataset_file(train_file);
  }
  if (!vocab_file.empty()) {
    exp.vocab = rbert::Vocab::from_file(vocab_file);
  } else {
    std::vector<std::string> words;
    for (const auto& inst : train_insts) {
      for (const auto& w : inst.sentence) words.push_back(w);
    }
    exp.vocab = rbert::Vocab::from_corpus(words);
  }

  bool markers = rbert::variant_uses_markers(exp.train_cfg.variant);
  if (need_train) {
    for (const auto& inst : train_insts) {
      exp.train_data.push_back(rbert::encode(
          inst, exp.vocab, exp.train_cfg.max_len, exp.space, markers));
    }
  }
  if (need_test) {
    std::string test_file = cfg.str("test_file");
    if (test_file.empty()) {
      throw rbert::data_error("config: test_file is required");
    }
    exp.test_instances = rbert::load_dataset_file(test_file);
    for (const auto& inst : exp.test_instances) {
      exp.test_data.push_back(rbert::encode(
          inst, exp.vocab, exp.train_cfg.max_len, exp.space, markers));
    }
  }
  return exp;
}

rbert::Model make_model(const Experiment& exp) {
  rbert::Rng rng(exp.train_cfg.seed);
  rbert::Model model;
  model.init(rbert::model_config_from(exp.train_cfg, exp.vocab.size(),
                                      exp.space.size()),
             rng);
  return model;
}

std::string metrics_log(const Experiment& exp,
                        const rbert::TrainResult& result) {
  std::ostringstream out;
  const auto& c = exp.train_cfg;
  rbert::AdamConfig a = c.adam();
  out << "# batch_size = " << c.batch_size << "\n";
  out << "# max_len = " << c.max_len << "\n";
  out << "# learning_rate = " << c.learning_rate << "\n";
  out << "# epochs = " << c.epochs << "\n";
  out << "# dropout = " << c.dropout << "\n";
  out << "# seed = " << c.seed << "\n";
  out << "# variant = " << rbert::variant_name(c.variant) << "\n";
  out << "# layers = " << c.layers << ", hidden = " << c.hidden
      << ", heads = " << c.heads << ", ffn = " << c.ffn << "\n";
  out << "# adam: beta1 = " << a.beta1 << ", beta2 = " << a.beta2
      << ", epsilon = " << a.epsilon << ", no weight decay\n";
  for (std::size_t e = 0; e < result.epochs.size(); ++e) {
    char line[128];
    std::snprintf(line, sizeof(line), "%zu\t%.6f\t%.6f\n", e + 1,
                  result.epochs[e].loss, result.epochs[e].accuracy);
    out << line;
  }
  return out.str();
}

int cmd_train(const CommonArgs& args) {
  Experiment exp = load_experiment(args, true, false);
  rbert::Model model = make_model(exp);
  rbert::TrainResult result =
      rbert::train(model, exp.train_data, exp.train_cfg);
  std::string out = args.out_path.empty() ? "model.ckpt" : args.out_path;
  model.save(out);
  write_file(out + ".metrics", metrics_log(exp, result));
  std::cout << "trained " << exp.train_cfg.epochs << " epochs, final loss "
            << (result.epochs.empty() ? 0.0 : result.epochs.back().loss)
            << ", checkpoint " << out << "\n";
  return kExitOk;
}

int cmd_eval(const CommonArgs& args, bool write_preds_only) {
  Experiment exp = load_experiment(args, false, true);
  rbert::Model model = make_model(exp);
  if (args.checkpoint_path.empty()) {
    throw rbert::data_error("--model checkpoint path is required");
  }
  model.load(args.checkpoint_path);
  auto [preds, acc] = rbert::evaluate(model, exp.test_data, exp.space);
  std::string pred_text = rbert::write_predictions(preds);
  if (!args.out_path.empty()) write_file(args.out_path, pred_text);
  if (write_preds_only) {
    if (args.out_path.empty()) std::cout << pred_text;
    return kExitOk;
  }
  std::vector<std::pair<int, rbert::DirectionalLabel>> gold;
  for (const auto& inst : exp.test_instances) {
    gold.emplace_back(inst.id, inst.label);
  }
  rbert::ScoreResult sr = rbert::score(gold, preds);
  std::cout << "accuracy " << acc << "\n";
  std::cout << "macro_f1 " << rbert::format_2dp(sr.macro_f1) << "\n";
  return kExitOk;
}

int cmd_score(const CommonArgs& args) {
  std::cout << rbert::score_files(args.gold_path, args.pred_path);
  return kExitOk;
}

int cmd_synth(const CommonArgs& args) {
  rbert::ConfigView cfg(rbert::load_config_file(args.config_path));
  int num_families = static_cast<int>(cfg.integer("num_families", 6));
  int filler_vocab = static_cast<int>(cfg.integer("vocab_size", 8));
  int train_count = static_cast<int>(cfg.integer("train_count", 600));
  int test_count = static_cast<int>(cfg.integer("test_count", 200));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed", 42));
  if (args.seed >= 0) seed = static_cast<std::uint64_t>(args.seed);
  rbert::SyntheticTask task = rbert::make_synthetic_task_sized(
      num_families, filler_vocab, train_count, test_count, seed);
  std::string dir = args.out_path.empty() ? "." : args.out_path;
  std::filesystem::create_directories(dir);
  write_file(dir + "/train.txt", rbert::render_dataset(task.train));
  write_file(dir + "/test.txt", rbert::render_dataset(task.test));
  write_file(dir + "/vocab.txt",
             rbert::Vocab::from_corpus(task.words).to_file_content());
  std::vector<std::pair<int, rbert::DirectionalLabel>> gold;
  for (const auto& inst : task.test) gold.emplace_back(inst.id, inst.label);
  write_file(dir + "/test_gold.txt", rbert::write_predictions(gold));
  std::cout << "wrote " << task.train.size() << " train / "
            << task.test.size() << " test instances to " << dir << "\n";
  return kExitOk;
}

// Trains and evaluates all four variants with a shared seed on the same
// data and prints one table row per variant.
int cmd_ablate(const CommonArgs& args) {
  struct Row {
    rbert::Variant variant;
    const char* label;
  };
  const Row rows[] = {
      {rbert::Variant::FULL, "R-BERT"},
      {rbert::Variant::NO_SEP, "R-BERT-NO-SEP"},
      {rbert::Variant::NO_ENT, "R-BERT-NO-ENT"},
      {rbert::Variant::NO_SEP_NO_ENT, "R-BERT-NO-SEP-NO-ENT"},
  };
  std::cout << "Method                F1\n";
  for (const Row& row : rows) {
    CommonArgs a = args;
    a.variant = rbert::variant_name(row.variant);
    Experiment exp = load_experiment(a, true, true);
    rbert::Model model = make_model(exp);
    rbert::train(model, exp.train_data, exp.train_cfg);
    auto [preds, acc] = rbert::evaluate(model, exp.test_data, exp.space);
    std::vector<std::pair<int, rbert::DirectionalLabel>> gold;
    for (const auto& inst : exp.test_instances) {
      gold.emplace_back(inst.id, inst.label);
    }
    double f1 = rbert::score(gold, preds).macro_f1;
    std::cout << row.label;
    for (std::size_t i = std::string(row.label).size(); i < 22; ++i) {
      std::cout << ' ';
    }
    std::cout << rbert::format_2dp(f1) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"R-BERT relation classifier"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", args.config_path, "config file");
    if (need_config) opt->required();
    sub->add_option("--seed", args.seed, "seed override");
    sub->add_option("--out", args.out_path, "output path");
    sub->add_option("--variant", args.variant,
                    "FULL | NO_SEP | NO_ENT | NO_SEP_NO_ENT");
  };

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, true);
  eval->add_option("--model", args.checkpoint_path, "checkpoint")->required();
  auto* predict = app.add_subcommand("predict", "write predictions");
  add_common(predict, true);
  predict->add_option("--model", args.checkpoint_path, "checkpoint")
      ->required();
  auto* scorecmd = app.add_subcommand("score", "score predictions");
  scorecmd->add_option("--gold", args.gold_path, "gold file")->required();
  scorecmd->add_option("--pred", args.pred_path, "prediction file")
      ->required();
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, true);
  auto* ablate = app.add_subcommand("ablate", "run all four variants");
  add_common(ablate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(args);
    if (eval->parsed()) return cmd_eval(args, false);
    if (predict->parsed()) return cmd_eval(args, true);
    if (scorecmd->parsed()) return cmd_score(args);
    if (synth->parsed()) return cmd_synth(args);
    if (ablate->parsed()) return cmd_ablate(args);
  } catch (const rbert::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const rbert::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
