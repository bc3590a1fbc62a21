// Exercises the shared library through its C interface only, and the
// command-line tool built on it.

#include <doctest.h>

#include "storylogic/storylogic.h"

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

class Scratch {
 public:
  explicit Scratch(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("storylogic-capi-" + tag + "-" +
                                         std::to_string(::getpid()) + "-" +
                                         std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;

  fs::path operator/(const std::string& name) const { return path_ / name; }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name, std::ios::binary) << text;
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Keyword stories in the cloze csv layout: the right ending repeats the plot's
// keyword.
std::string cloze_csv(std::size_t count, unsigned seed) {
  static const std::vector<std::string> keys = {"apple", "boat", "cake", "dog", "egg", "fire"};
  static const std::vector<std::string> filler = {"we", "saw", "a", "the", "then", "it"};
  std::mt19937 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  std::ostringstream out;
  out << "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
         "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n";
  for (std::size_t n = 0; n < count; ++n) {
    const std::string key = pick(keys);
    std::string other = pick(keys);
    while (other == key) other = pick(keys);
    out << "s" << seed << "-" << n;
    const std::size_t where = rng() % 4;
    for (std::size_t i = 0; i < 4; ++i) {
      out << ',' << pick(filler) << ' ' << (i == where ? key + " " : "") << pick(filler) << '.';
    }
    const int right = static_cast<int>(rng() % 2) + 1;
    const std::string good = "then " + key + " again.";
    const std::string bad = "then " + other + " again.";
    out << ',' << (right == 1 ? good : bad) << ',' << (right == 1 ? bad : good) << ',' << right
        << '\n';
  }
  return out.str();
}

std::string nli_jsonl(std::size_t count) {
  static const std::array<const char*, 3> labels = {"entailment", "neutral", "contradiction"};
  static const std::array<const char*, 4> subjects = {"man", "woman", "dog", "cat"};
  std::ostringstream out;
  for (std::size_t n = 0; n < count; ++n) {
    const std::string premise = std::string("the ") + subjects[n % 4] + " runs";
    const std::size_t label = n % 3;
    const std::string hypothesis = label == 0   ? premise
                                   : label == 1 ? premise + " today"
                                                : std::string("the ") + subjects[n % 4] + " not runs";
    out << R"({"gold_label": ")" << labels[label] << R"(", "sentence1": ")" << premise
        << R"(", "sentence2": ")" << hypothesis << "\"}\n";
  }
  out << R"({"gold_label": "-", "sentence1": "a b", "sentence2": "c d"})" << '\n';
  return out.str();
}

struct ConfigHandle {
  sl_config* ptr = nullptr;
  ConfigHandle() { REQUIRE(sl_config_new(&ptr) == SL_OK); }
  ~ConfigHandle() { sl_config_free(ptr); }
  void set(const char* key, const char* value) { REQUIRE(sl_config_set(ptr, key, value) == SL_OK); }
  std::string get(const char* key) const {
    char buf[64];
    size_t needed = 0;
    REQUIRE(sl_config_get(ptr, key, buf, sizeof buf, &needed) == SL_OK);
    return buf;
  }
};

void make_small(ConfigHandle& c) {
  c.set("emb_dim", "8");
  c.set("cu_hidden", "4");
  c.set("esim_hidden", "4");
  c.set("tracker_hidden", "4");
  c.set("scorer_hidden", "4");
  c.set("batch_size", "4");
  c.set("max_epochs_nli", "2");
  c.set("max_epochs_sct", "1");
  c.set("nli_val_size", "6");
}

const char* const kSmallFlags =
    " --emb-dim 8 --cu-hidden 4 --esim-hidden 4 --tracker-hidden 4 --scorer-hidden 4"
    " --batch-size 4 --max-epochs-nli 2 --max-epochs-sct 1 --nli-val-size 6";

struct Run {
  int exit_code;
  std::string output;
};

// Runs the command-line tool with stderr folded into stdout.
Run cli(const std::string& args) {
  const std::string command = std::string(STORYLOGIC_CLI) + " " + args + " 2>&1";
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) output += buf;
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("status names, version and last error") {
  CHECK(std::string(sl_version()).size() > 0);
  CHECK(std::string(sl_status_name(SL_OK)) == "ok");
  CHECK(std::string(sl_status_name(SL_ERR_MISMATCH)) == "mismatch");
  CHECK(std::string(sl_status_name(42)) == "unknown status");

  CHECK(sl_config_new(nullptr) == SL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sl_last_error()).size() > 0);
  sl_model* model = nullptr;
  CHECK(sl_model_load("/nonexistent/m.ckpt", "/nonexistent/vocab.txt", &model) == SL_ERR_IO);
  CHECK(model == nullptr);
  CHECK(contains(sl_last_error(), "/nonexistent/vocab.txt"));
  sl_config_free(nullptr);
  sl_model_free(nullptr);
}

TEST_CASE("tokenize through the C interface") {
  size_t needed = 0;
  char buf[64];
  REQUIRE(sl_tokenize("Daddy took us camping!", buf, sizeof buf, &needed) == SL_OK);
  CHECK(std::string(buf) == "daddy took us camping !");
  CHECK(needed == std::string("daddy took us camping !").size() + 1);
  char small[6];
  REQUIRE(sl_tokenize("Daddy took us camping!", small, sizeof small, &needed) == SL_OK);
  CHECK(std::string(small) == "daddy");
  CHECK(needed == std::string("daddy took us camping !").size() + 1);
  CHECK(sl_tokenize(nullptr, buf, sizeof buf, &needed) == SL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config handles") {
  ConfigHandle c;
  CHECK(c.get("mode") == "full");
  CHECK(c.get("emb_dim") == "300");
  c.set("learning-rate", "0.002");
  CHECK(c.get("learning_rate") == "0.002");
  c.set("freeze_extractor", "true");
  CHECK(c.get("freeze_extractor") == "true");

  CHECK(sl_config_set(c.ptr, "no_such_key", "1") == SL_ERR_INVALID_ARGUMENT);
  CHECK(contains(sl_last_error(), "no_such_key"));
  CHECK(sl_config_set(c.ptr, "mode", "sideways") == SL_ERR_INVALID_ARGUMENT);
  CHECK(sl_config_set(c.ptr, "batch_size", "many") == SL_ERR_INVALID_ARGUMENT);

  char tiny[2];
  size_t needed = 0;
  CHECK(sl_config_get(c.ptr, "mode", tiny, sizeof tiny, &needed) == SL_OK);
  CHECK(needed == 5);

  Scratch dir("config");
  const auto path = (dir / "c.txt").string();
  REQUIRE(sl_config_save(c.ptr, path.c_str()) == SL_OK);
  ConfigHandle reloaded;
  REQUIRE(sl_config_load(reloaded.ptr, path.c_str()) == SL_OK);
  CHECK(reloaded.get("learning_rate") == "0.002");
  CHECK(reloaded.get("freeze_extractor") == "true");

  sl_config* copy = nullptr;
  REQUIRE(sl_config_copy(c.ptr, &copy) == SL_OK);
  char buf[32];
  REQUIRE(sl_config_get(copy, "learning_rate", buf, sizeof buf, &needed) == SL_OK);
  CHECK(std::string(buf) == "0.002");
  sl_config_free(copy);

  const auto bad = dir.write("bad.txt", "emb_dim = 8\nnot a pair\n");
  CHECK(sl_config_load(reloaded.ptr, bad.c_str()) == SL_ERR_USAGE);
  c.set("batch_size", "0");
  CHECK(sl_config_validate(c.ptr) != SL_OK);
}

TEST_CASE("pipeline through the C interface") {
  Scratch dir("pipeline");
  sl_paths paths{};
  const auto snli = dir.write("snli.jsonl", nli_jsonl(30));
  const auto multinli = dir.write("multinli.jsonl", nli_jsonl(12));
  const auto sct_val = dir.write("val.csv", cloze_csv(25, 1));
  const auto sct_test = dir.write("test.csv", cloze_csv(10, 2));
  paths.snli = snli.c_str();
  paths.multinli = multinli.c_str();
  paths.sct_val = sct_val.c_str();
  paths.sct_test = sct_test.c_str();

  ConfigHandle config;
  make_small(config);

  const auto prep = (dir / "prep").string();
  sl_prepare_summary summary{};
  REQUIRE(sl_prepare_data(config.ptr, &paths, prep.c_str(), &summary) == SL_OK);
  CHECK(summary.nli_read == 44);
  CHECK(summary.nli_unlabeled == 2);
  CHECK(summary.nli_train == 36);
  CHECK(summary.nli_val == 6);
  CHECK(summary.sct_val == 25);
  CHECK(summary.sct_test == 10);
  CHECK(summary.vocab_size > 10);
  CHECK(fs::exists(dir / "prep/prepare_report.txt"));

  const auto vocab = (dir / "prep/vocab.txt").string();
  const auto nli_train = (dir / "prep/nli_train.jsonl").string();
  const auto nli_val = (dir / "prep/nli_val.jsonl").string();
  paths.vocab = vocab.c_str();
  paths.nli_train = nli_train.c_str();
  paths.nli_val = nli_val.c_str();

  const auto nli_dir = (dir / "nli").string();
  double best = -1.0;
  REQUIRE(sl_pretrain_nli(config.ptr, &paths, nli_dir.c_str(), &best) == SL_OK);
  CHECK(best >= 0.0);
  CHECK(best <= 1.0);
  const auto pretrained = (dir / "nli/nli.ckpt").string();
  REQUIRE(fs::exists(pretrained));

  // A frozen extractor needs a pretrained one.
  ConfigHandle frozen;
  make_small(frozen);
  frozen.set("freeze_extractor", "true");
  sl_cv_summary cv{};
  const auto frozen_dir = (dir / "frozen").string();
  CHECK(sl_train_sct(frozen.ptr, &paths, frozen_dir.c_str(), &cv) == SL_ERR_USAGE);

  paths.pretrained = pretrained.c_str();
  const auto sct_dir = (dir / "sct").string();
  REQUIRE(sl_train_sct(config.ptr, &paths, sct_dir.c_str(), &cv) == SL_OK);
  CHECK(cv.mode == 0);
  CHECK(cv.folds == 5);
  CHECK(cv.test_size == 10);
  CHECK(std::isfinite(cv.mean_test_acc));
  CHECK(fs::exists(dir / "sct/report.txt"));
  CHECK(fs::exists(dir / "sct/folds.tsv"));

  std::vector<std::string> ckpts;
  for (int f = 0; f < 5; ++f) ckpts.push_back((dir / ("sct/folds/fold" + std::to_string(f) + ".ckpt")).string());
  std::vector<const char*> raw;
  for (const auto& c : ckpts) raw.push_back(c.c_str());
  std::vector<double> acc(raw.size());
  double ensemble = 0.0;
  REQUIRE(sl_evaluate(raw.data(), raw.size(), &paths, nullptr, acc.data(), &ensemble) == SL_OK);
  CHECK(ensemble == doctest::Approx(cv.ensemble_test_acc));
  double mean = 0.0;
  for (double a : acc) mean += a / 5.0;
  CHECK(mean == doctest::Approx(cv.mean_test_acc));

  sl_model* model = nullptr;
  REQUIRE(sl_model_load(raw[0], vocab.c_str(), &model) == SL_OK);
  const char* plot[4] = {"We saw apple then.", "it was a.", "the then saw.", "a the it."};
  double scores[2];
  int choice = 0;
  REQUIRE(sl_model_predict(model, plot, "then apple again.", "then dog again.", scores, &choice) ==
          SL_OK);
  double s1 = 0.0, s2 = 0.0;
  REQUIRE(sl_model_score(model, plot, "then apple again.", &s1) == SL_OK);
  REQUIRE(sl_model_score(model, plot, "then dog again.", &s2) == SL_OK);
  CHECK(s1 == scores[0]);
  CHECK(s2 == scores[1]);
  CHECK(choice == (scores[1] > scores[0] ? 2 : 1));

  const auto one = dir.write("one.csv", cloze_csv(1, 9));
  int answer = 0;
  REQUIRE(sl_model_predict_file(model, one.c_str(), scores, &choice, &answer) == SL_OK);
  CHECK((answer == 1 || answer == 2));
  const auto two = dir.write("two.csv", cloze_csv(2, 9));
  CHECK(sl_model_predict_file(model, two.c_str(), scores, &choice, nullptr) == SL_ERR_FORMAT);

  sl_config* model_config = nullptr;
  REQUIRE(sl_model_config(model, &model_config) == SL_OK);
  char buf[16];
  size_t needed = 0;
  REQUIRE(sl_config_get(model_config, "emb_dim", buf, sizeof buf, &needed) == SL_OK);
  CHECK(std::string(buf) == "8");
  sl_config_free(model_config);
  sl_model_free(model);

  // A vocabulary other than the one trained on is refused.
  const auto other = dir.write("other_vocab.txt", "<pad>\n<unk>\nzebra\n");
  CHECK(sl_model_load(raw[0], other.c_str(), &model) == SL_ERR_MISMATCH);

  const auto ablation_dir = (dir / "ablate").string();
  sl_cv_summary modes[3]{};
  REQUIRE(sl_ablate(config.ptr, &paths, ablation_dir.c_str(), modes) == SL_OK);
  CHECK(modes[0].mode == 0);
  CHECK(modes[1].mode == 1);
  CHECK(modes[2].mode == 2);
  CHECK(contains(slurp(dir / "ablate/ablation.txt"), "identical fold membership: yes"));

  const auto corrupt = dir.write("corrupt.ckpt", "not a checkpoint\n");
  const char* bad[1] = {corrupt.c_str()};
  CHECK(sl_evaluate(bad, 1, &paths, nullptr, acc.data(), &ensemble) == SL_ERR_FORMAT);
}

TEST_CASE("command line: usage errors exit 2") {
  Scratch dir("cli-usage");
  const auto vocab = dir.write("vocab.txt", "<pad>\n<unk>\nwe\n");
  const auto test = dir.write("test.csv", cloze_csv(3, 4));

  const auto missing = cli("train-sct --vocab " + vocab + " --sct-test " + test + " --out-dir " +
                           (dir / "out").string());
  CHECK(missing.exit_code == 2);
  CHECK(contains(missing.output, "--sct-val"));

  const auto absent = cli("train-sct --vocab " + vocab + " --sct-val " +
                          (dir / "absent.csv").string() + " --sct-test " + test + " --out-dir " +
                          (dir / "out").string());
  CHECK(absent.exit_code == 2);
  CHECK(contains(absent.output, "absent.csv"));

  const auto frozen = cli("train-sct --vocab " + vocab + " --sct-val " + test + " --sct-test " +
                          test + " --freeze-extractor --out-dir " + (dir / "out").string());
  CHECK(frozen.exit_code == 2);
  CHECK(contains(frozen.output, "--pretrained"));

  const auto bad_value = cli("train-sct --vocab " + vocab + " --sct-val " + test + " --sct-test " +
                             test + " --mode sideways --out-dir " + (dir / "out").string());
  CHECK(bad_value.exit_code == 2);
  CHECK(contains(bad_value.output, "--mode"));

  CHECK(cli("").exit_code == 2);
  CHECK(cli("--help").exit_code == 0);
}

TEST_CASE("command line: end to end on synthetic files") {
  Scratch dir("cli-run");
  const auto snli = dir.write("snli.jsonl", nli_jsonl(30));
  const auto multinli = dir.write("multinli.jsonl", nli_jsonl(12));
  const auto val = dir.write("val.csv", cloze_csv(25, 1));
  const auto test = dir.write("test.csv", cloze_csv(10, 2));
  const auto out = (dir / "run").string();
  const auto config = dir.write("small.cfg", "# small model\nemb_dim = 8\ncu_hidden = 4\n");

  const auto prep = cli("prepare-data --config " + config + kSmallFlags + " --snli " + snli +
                        " --multinli " + multinli + " --sct-val " + val + " --sct-test " + test +
                        " --out-dir " + out);
  REQUIRE_MESSAGE(prep.exit_code == 0, prep.output);
  CHECK(contains(prep.output, "nli train: 36"));
  const auto echoed = slurp(dir / "run/config.txt");
  CHECK(contains(echoed, "emb_dim=8"));
  CHECK(contains(echoed, "nli_val_size=6"));

  const auto vocab = out + "/vocab.txt";
  const auto pre = cli(std::string("pretrain-nli") + kSmallFlags + " --vocab " + vocab +
                       " --nli-train " + out + "/nli_train.jsonl --nli-val " + out +
                       "/nli_val.jsonl --out-dir " + out + "/nli");
  REQUIRE_MESSAGE(pre.exit_code == 0, pre.output);
  CHECK(contains(pre.output, "best validation accuracy"));

  const auto train = cli(std::string("train-sct") + kSmallFlags + " --seed 7 --vocab " + vocab +
                         " --sct-val " + val + " --sct-test " + test + " --pretrained " + out +
                         "/nli/nli.ckpt --freeze-extractor --out-dir " + out + "/sct");
  REQUIRE_MESSAGE(train.exit_code == 0, train.output);
  CHECK(contains(train.output, "mode full: 5 folds, 10 test instances"));
  CHECK(contains(slurp(dir / "run/sct/config.txt"), "seed=7"));
  CHECK(contains(slurp(dir / "run/sct/config.txt"), "freeze_extractor=true"));

  const auto ckpt = out + "/sct/folds/fold0.ckpt";
  const auto eval = cli("evaluate --checkpoint " + ckpt + " --checkpoint " + out +
                        "/sct/folds/fold1.ckpt --vocab " + vocab + " --sct-test " + test);
  REQUIRE_MESSAGE(eval.exit_code == 0, eval.output);
  CHECK(contains(eval.output, "ensemble\t"));

  const auto predict = cli("predict --checkpoint " + ckpt + " --vocab " + vocab +
                           " 'We saw apple.' 'it was.' 'the then.' 'a it.' 'then apple again.'"
                           " 'then dog again.'");
  REQUIRE_MESSAGE(predict.exit_code == 0, predict.output);
  CHECK(contains(predict.output, "score 1: "));
  CHECK(contains(predict.output, "score 2: "));
  CHECK(contains(predict.output, "choice: "));

  const auto one = dir.write("one.csv", cloze_csv(1, 5));
  const auto from_file =
      cli("predict --checkpoint " + ckpt + " --vocab " + vocab + " --story-file " + one);
  REQUIRE_MESSAGE(from_file.exit_code == 0, from_file.output);
  CHECK(contains(from_file.output, "answer: "));

  const auto corrupt = dir.write("corrupt.ckpt", "garbage\n");
  const auto failed =
      cli("predict --checkpoint " + corrupt + " --vocab " + vocab + " --story-file " + one);
  CHECK(failed.exit_code == 1);
  CHECK(contains(failed.output, "format"));
}
