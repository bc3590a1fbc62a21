// storylogic: command-line front end over the C library.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "storylogic/storylogic.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown for contradictions detected after parsing; reported like a parse error.
struct UsageProblem {
  std::string message;
};

struct ConfigDeleter {
  void operator()(sl_config* c) const { sl_config_free(c); }
};
using ConfigPtr = std::unique_ptr<sl_config, ConfigDeleter>;

struct ModelDeleter {
  void operator()(sl_model* m) const { sl_model_free(m); }
};
using ModelPtr = std::unique_ptr<sl_model, ModelDeleter>;

// Config keys exposed as --kebab-case flags on every command.
const std::vector<std::string> kValueKeys = {
    "mode",          "emb_dim",        "cu_hidden",      "esim_hidden", "tracker_hidden",
    "scorer_hidden", "margin",         "learning_rate",  "batch_size",  "dropout",
    "clip_norm",     "patience",       "max_epochs_nli", "max_epochs_sct", "folds",
    "max_len",       "nli_val_size",   "min_count"};
const std::vector<std::string> kBoolKeys = {"freeze_extractor", "train_embeddings"};

std::string kebab(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

struct Common {
  std::string config_file;
  std::optional<std::string> seed;
  std::map<std::string, std::string> overrides;
  std::string out_dir;
  bool verbose = false;
  bool quiet = false;
};

struct Paths {
  std::string rocstories, sct_val, sct_test, snli, multinli, vectors, vocab, nli_train, nli_val,
      pretrained;

  sl_paths view() const {
    auto c = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
    return sl_paths{c(rocstories), c(sct_val),  c(sct_test),  c(snli),    c(multinli),
                    c(vectors),    c(vocab),    c(nli_train), c(nli_val), c(pretrained)};
  }
};

void add_common(CLI::App* cmd, Common& common, bool out_dir_required) {
  cmd->add_option("--config", common.config_file, "key=value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option_function<std::string>(
      "--seed", [&common](const std::string& v) { common.seed = v; }, "random seed");
  for (const auto& key : kValueKeys) {
    cmd->add_option_function<std::string>(
        "--" + kebab(key), [&common, key](const std::string& v) { common.overrides[key] = v; });
  }
  for (const auto& key : kBoolKeys) {
    cmd->add_flag_function(
        "--" + kebab(key) + "{true}",
        [&common, key](std::int64_t count) { common.overrides[key] = count > 0 ? "true" : "false"; });
    cmd->add_flag_function(
        "--no-" + kebab(key), [&common, key](std::int64_t) { common.overrides[key] = "false"; });
  }
  auto* out = cmd->add_option("--out-dir", common.out_dir, "output directory");
  if (out_dir_required) out->required();
  cmd->add_flag("-v,--verbose", common.verbose, "progress messages");
  cmd->add_flag("-q,--quiet", common.quiet, "errors only");
}

void add_path(CLI::App* cmd, const std::string& flag, std::string& target, bool required,
              const std::string& help) {
  auto* opt = cmd->add_option(flag, target, help)->check(CLI::ExistingPath);
  if (required) opt->required();
}

[[noreturn]] void runtime_failure(int status, const std::string& what) {
  std::cerr << "storylogic: " << what << " failed (" << sl_status_name(status)
            << "): " << sl_last_error() << '\n';
  std::exit(status == SL_ERR_USAGE || status == SL_ERR_INVALID_ARGUMENT ? kExitUsage
                                                                         : kExitRuntime);
}

void check(int status, const std::string& what) {
  if (status != SL_OK) runtime_failure(status, what);
}

// Defaults, then the config file, then flags.
ConfigPtr effective_config(const Common& common) {
  sl_config* raw = nullptr;
  check(sl_config_new(&raw), "creating a config");
  ConfigPtr config(raw);
  if (!common.config_file.empty()) {
    const int rc = sl_config_load(config.get(), common.config_file.c_str());
    if (rc != SL_OK) throw UsageProblem{sl_last_error()};
  }
  for (const auto& [key, value] : common.overrides) {
    if (sl_config_set(config.get(), key.c_str(), value.c_str()) != SL_OK) {
      throw UsageProblem{"--" + kebab(key) + ": " + sl_last_error()};
    }
  }
  if (common.seed && sl_config_set(config.get(), "seed", common.seed->c_str()) != SL_OK) {
    throw UsageProblem{std::string("--seed: ") + sl_last_error()};
  }
  if (sl_config_validate(config.get()) != SL_OK) throw UsageProblem{sl_last_error()};
  return config;
}

std::string config_value(const sl_config* config, const char* key) {
  char buf[128];
  size_t needed = 0;
  check(sl_config_get(config, key, buf, sizeof buf, &needed), "reading the config");
  return buf;
}

void echo_config(const sl_config* config, const std::string& out_dir) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  const auto path = (std::filesystem::path(out_dir) / "config.txt").string();
  check(sl_config_save(config, path.c_str()), "writing the effective config");
}

void require_pretrained_when_frozen(const sl_config* config, const Paths& paths) {
  const bool frozen = config_value(config, "freeze_extractor") == "true";
  const bool uses_logic = config_value(config, "mode") != "cu_only";
  if (frozen && uses_logic && paths.pretrained.empty()) {
    throw UsageProblem{"--freeze-extractor in mode " + config_value(config, "mode") +
                       " needs --pretrained"};
  }
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void print_cv(const sl_cv_summary& s) {
  static const char* modes[] = {"full", "cu_only", "lu_only"};
  std::cout << "mode " << modes[s.mode] << ": " << s.folds << " folds, " << s.test_size
            << " test instances\n"
            << "  mean test accuracy " << fixed(s.mean_test_acc) << " (std "
            << fixed(s.std_test_acc) << ")\n"
            << "  ensemble test accuracy " << fixed(s.ensemble_test_acc) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Story ending selection: data preparation, NLI pretraining, cross-validated "
               "training, evaluation and prediction."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sl_version()));

  Common common;
  Paths paths;
  std::vector<std::string> checkpoints;
  std::vector<std::string> story;
  std::string story_file;

  auto* prepare = app.add_subcommand("prepare-data", "blend and filter NLI data, build the vocabulary");
  add_common(prepare, common, true);
  add_path(prepare, "--snli", paths.snli, true, "SNLI jsonl");
  add_path(prepare, "--multinli", paths.multinli, true, "MultiNLI jsonl");
  add_path(prepare, "--sct-val", paths.sct_val, false, "cloze validation csv");
  add_path(prepare, "--sct-test", paths.sct_test, false, "cloze test csv");
  add_path(prepare, "--rocstories", paths.rocstories, false, "ROCStories csv");

  auto* pretrain = app.add_subcommand("pretrain-nli", "pretrain the NLI model");
  add_common(pretrain, common, true);
  add_path(pretrain, "--vocab", paths.vocab, true, "vocabulary from prepare-data");
  add_path(pretrain, "--nli-train", paths.nli_train, true, "blended NLI training jsonl");
  add_path(pretrain, "--nli-val", paths.nli_val, true, "blended NLI validation jsonl");
  add_path(pretrain, "--vectors", paths.vectors, false, "word vectors");

  auto* train = app.add_subcommand("train-sct", "k-fold cross-validation on the cloze set");
  add_common(train, common, true);
  add_path(train, "--vocab", paths.vocab, true, "vocabulary from prepare-data");
  add_path(train, "--sct-val", paths.sct_val, true, "cloze validation csv");
  add_path(train, "--sct-test", paths.sct_test, true, "cloze test csv");
  add_path(train, "--pretrained", paths.pretrained, false, "NLI checkpoint");
  add_path(train, "--vectors", paths.vectors, false, "word vectors");

  auto* ablate = app.add_subcommand("ablate", "cross-validation in full, cu_only and lu_only");
  add_common(ablate, common, true);
  add_path(ablate, "--vocab", paths.vocab, true, "vocabulary from prepare-data");
  add_path(ablate, "--sct-val", paths.sct_val, true, "cloze validation csv");
  add_path(ablate, "--sct-test", paths.sct_test, true, "cloze test csv");
  add_path(ablate, "--pretrained", paths.pretrained, false, "NLI checkpoint");
  add_path(ablate, "--vectors", paths.vectors, false, "word vectors");

  auto* evaluate = app.add_subcommand("evaluate", "accuracy of checkpoints on a test file");
  add_common(evaluate, common, false);
  evaluate->add_option("--checkpoint", checkpoints, "story model checkpoint (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  add_path(evaluate, "--vocab", paths.vocab, true, "vocabulary");
  add_path(evaluate, "--sct-test", paths.sct_test, true, "cloze test csv");

  auto* predict = app.add_subcommand("predict", "score two endings of one story");
  add_common(predict, common, false);
  predict->add_option("--checkpoint", checkpoints, "story model checkpoint")
      ->required()
      ->expected(1)
      ->check(CLI::ExistingFile);
  add_path(predict, "--vocab", paths.vocab, true, "vocabulary");
  auto* file_opt = predict->add_option("--story-file", story_file, "one-row cloze csv")
                       ->check(CLI::ExistingFile);
  auto* story_opt =
      predict->add_option("sentences", story, "four plot sentences and two endings")->expected(6);
  file_opt->excludes(story_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  sl_set_log_level(common.quiet ? SL_LOG_QUIET : common.verbose ? SL_LOG_INFO : SL_LOG_WARN);

  try {
    const ConfigPtr config = effective_config(common);
    const sl_paths view = paths.view();

    if (prepare->parsed()) {
      echo_config(config.get(), common.out_dir);
      sl_prepare_summary s{};
      check(sl_prepare_data(config.get(), &view, common.out_dir.c_str(), &s), "prepare-data");
      std::cout << "nli records read: " << s.nli_read << '\n'
                << "nli dropped (unlabeled / too long / malformed): " << s.nli_unlabeled
                << " / " << s.nli_too_long << " / " << s.nli_malformed << '\n'
                << "nli train: " << s.nli_train << '\n'
                << "nli val: " << s.nli_val << '\n'
                << "rocstories: " << s.stories << '\n'
                << "cloze val / test: " << s.sct_val << " / " << s.sct_test << '\n'
                << "vocabulary: " << s.vocab_size << '\n';
    } else if (pretrain->parsed()) {
      echo_config(config.get(), common.out_dir);
      double best = 0.0;
      check(sl_pretrain_nli(config.get(), &view, common.out_dir.c_str(), &best), "pretrain-nli");
      std::cout << "best validation accuracy " << fixed(best) << '\n'
                << "checkpoint " << (std::filesystem::path(common.out_dir) / "nli.ckpt").string()
                << '\n';
    } else if (train->parsed()) {
      require_pretrained_when_frozen(config.get(), paths);
      echo_config(config.get(), common.out_dir);
      sl_cv_summary s{};
      check(sl_train_sct(config.get(), &view, common.out_dir.c_str(), &s), "train-sct");
      print_cv(s);
    } else if (ablate->parsed()) {
      require_pretrained_when_frozen(config.get(), paths);
      echo_config(config.get(), common.out_dir);
      sl_cv_summary s[3]{};
      check(sl_ablate(config.get(), &view, common.out_dir.c_str(), s), "ablate");
      for (const auto& m : s) print_cv(m);
    } else if (evaluate->parsed()) {
      echo_config(config.get(), common.out_dir);
      std::vector<const char*> raw;
      for (const auto& c : checkpoints) raw.push_back(c.c_str());
      std::vector<double> acc(raw.size());
      double ensemble = 0.0;
      check(sl_evaluate(raw.data(), raw.size(), &view,
                        common.out_dir.empty() ? nullptr : common.out_dir.c_str(), acc.data(),
                        &ensemble),
            "evaluate");
      for (std::size_t i = 0; i < raw.size(); ++i) {
        std::cout << checkpoints[i] << '\t' << fixed(acc[i]) << '\n';
      }
      std::cout << "ensemble\t" << fixed(ensemble) << '\n';
    } else if (predict->parsed()) {
      if (story.empty() && story_file.empty()) {
        throw UsageProblem{"predict needs six sentences or --story-file"};
      }
      echo_config(config.get(), common.out_dir);
      sl_model* raw = nullptr;
      check(sl_model_load(checkpoints.front().c_str(), paths.vocab.c_str(), &raw), "loading the model");
      const ModelPtr model(raw);
      double scores[2] = {0.0, 0.0};
      int choice = 0;
      int answer = 0;
      if (!story_file.empty()) {
        check(sl_model_predict_file(model.get(), story_file.c_str(), scores, &choice, &answer),
              "predict");
      } else {
        const char* plot[4] = {story[0].c_str(), story[1].c_str(), story[2].c_str(),
                               story[3].c_str()};
        check(sl_model_predict(model.get(), plot, story[4].c_str(), story[5].c_str(), scores,
                               &choice),
              "predict");
      }
      std::printf("score 1: %.6f\nscore 2: %.6f\nchoice: %d\n", scores[0], scores[1], choice);
      if (answer != 0) std::printf("answer: %d\n", answer);
    }
  } catch (const UsageProblem& e) {
    std::cerr << "storylogic: " << e.message << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "storylogic: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
