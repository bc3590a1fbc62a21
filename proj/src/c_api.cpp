#include "storylogic/storylogic.h"

#include "storylogic/checkpoint.hpp"
#include "storylogic/config.hpp"
#include "storylogic/data.hpp"
#include "storylogic/error.hpp"
#include "storylogic/log.hpp"
#include "storylogic/score_model.hpp"
#include "storylogic/train.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

using namespace storylogic;
namespace fs = std::filesystem;

struct sl_config {
  ModelConfig value;
};

struct sl_model {
  Vocabulary vocab;
  StoryModel<float> model;
};

namespace {

thread_local std::string g_last_error;

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

int fail(int status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `fn` and maps any exception onto a status code.
template <typename Fn>
int guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SL_OK;
  } catch (const InvalidArgument& e) {
    return fail(SL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const IoError& e) {
    return fail(SL_ERR_IO, e.what());
  } catch (const FormatError& e) {
    return fail(SL_ERR_FORMAT, e.what());
  } catch (const MismatchError& e) {
    return fail(SL_ERR_MISMATCH, e.what());
  } catch (const NumericError& e) {
    return fail(SL_ERR_NUMERIC, e.what());
  } catch (const UsageError& e) {
    return fail(SL_ERR_USAGE, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(SL_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SL_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " is null");
}

// The path, or an empty optional when unset.
std::optional<fs::path> optional_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return fs::path(p);
}

fs::path required_path(const char* p, const char* what) {
  if (p == nullptr || *p == '\0') throw UsageError(std::string(what) + " path is required");
  fs::path path(p);
  if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path.string());
  return path;
}

fs::path output_dir(const char* dir) {
  if (dir == nullptr || *dir == '\0') throw UsageError("an output directory is required");
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (buf != nullptr && cap > 0) {
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  }
  return SL_OK;
}

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

std::optional<EmbeddingMatrix> embeddings_for(const ModelConfig& config, const sl_paths& paths,
                                              const Vocabulary& vocab) {
  const auto vectors = optional_path(paths.vectors);
  if (!vectors) return std::nullopt;
  auto emb = load_embeddings(*vectors, vocab, config.emb_dim, config.seed);
  emb.trainable = config.train_embeddings;
  log::info("word vectors: " + std::to_string(emb.found) + " of " +
            std::to_string(vocab.size()) + " tokens found");
  return emb;
}

sl_cv_summary summarize(const CvReport& r) {
  sl_cv_summary s{};
  s.mode = static_cast<int>(r.mode);
  s.folds = static_cast<int>(r.folds.size());
  s.test_size = r.test_size;
  s.mean_test_acc = r.mean_test_acc;
  s.std_test_acc = r.std_test_acc;
  s.ensemble_test_acc = r.ensemble_test_acc;
  return s;
}

struct SctInputs {
  Vocabulary vocab;
  std::vector<ClozeInstance> train;
  std::vector<ClozeInstance> test;
  std::optional<Checkpoint> pretrained;
  std::optional<EmbeddingMatrix> embeddings;
};

SctInputs load_sct_inputs(const ModelConfig& config, const sl_paths& paths) {
  SctInputs in;
  in.vocab = Vocabulary::load(required_path(paths.vocab, "vocabulary"));
  in.train = load_cloze(required_path(paths.sct_val, "cloze validation"));
  in.test = load_cloze(required_path(paths.sct_test, "cloze test"));
  if (const auto p = optional_path(paths.pretrained)) {
    in.pretrained = load_checkpoint(required_path(paths.pretrained, "pretrained checkpoint"),
                                    &in.vocab);
  }
  in.embeddings = embeddings_for(config, paths, in.vocab);
  return in;
}

std::string vocab_digest(const Vocabulary& vocab) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(vocab.fingerprint()));
  return buf;
}

}  // namespace

extern "C" {

const char* sl_version(void) { return "1.0.0"; }

const char* sl_status_name(int status) {
  switch (status) {
    case SL_OK:
      return "ok";
    case SL_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SL_ERR_IO:
      return "i/o error";
    case SL_ERR_FORMAT:
      return "format error";
    case SL_ERR_MISMATCH:
      return "mismatch";
    case SL_ERR_NUMERIC:
      return "numeric error";
    case SL_ERR_USAGE:
      return "usage error";
    case SL_ERR_INTERNAL:
      return "internal error";
    default:
      return "unknown status";
  }
}

const char* sl_last_error(void) { return g_last_error.c_str(); }

void sl_set_log_level(int level) {
  if (level < SL_LOG_QUIET) level = SL_LOG_QUIET;
  if (level > SL_LOG_DEBUG) level = SL_LOG_DEBUG;
  log::set_level(static_cast<log::Level>(level));
}

int sl_tokenize(const char* text, char* buf, size_t cap, size_t* needed) {
  std::string joined;
  const int rc = guard([&] {
    require(text, "text");
    for (const auto& t : tokenize(text)) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
  });
  if (rc != SL_OK) return rc;
  return copy_out(joined, buf, cap, needed);
}

int sl_config_new(sl_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new sl_config{};
  });
}

void sl_config_free(sl_config* config) { delete config; }

int sl_config_copy(const sl_config* config, sl_config** out) {
  return guard([&] {
    require(config, "config");
    require(out, "out");
    *out = new sl_config{config->value};
  });
}

int sl_config_set(sl_config* config, const char* key, const char* value) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    try {
      if (!config->value.set(normalize_key(key), value)) {
        throw InvalidArgument(std::string("unknown config key: ") + key);
      }
    } catch (const UsageError& e) {
      throw InvalidArgument(e.what());
    }
  });
}

int sl_config_get(const sl_config* config, const char* key, char* buf, size_t cap,
                  size_t* needed) {
  std::string found;
  const int rc = guard([&] {
    require(config, "config");
    require(key, "key");
    const std::string k = normalize_key(key);
    for (const auto& [name, value] : config->value.to_pairs()) {
      if (name == k) {
        found = value;
        return;
      }
    }
    throw InvalidArgument(std::string("unknown config key: ") + key);
  });
  if (rc != SL_OK) return rc;
  return copy_out(found, buf, cap, needed);
}

int sl_config_load(sl_config* config, const char* path) {
  return guard([&] {
    require(config, "config");
    const auto p = required_path(path, "config file");
    ModelConfig next = config->value;
    for (const auto& [key, value] : parse_key_values(read_text(p))) {
      if (!next.set(normalize_key(key), value)) {
        throw UsageError(p.string() + ": unknown config key '" + key + "'");
      }
    }
    config->value = next;
  });
}

int sl_config_save(const sl_config* config, const char* path) {
  return guard([&] {
    require(config, "config");
    require(path, "path");
    write_text(path, config->value.to_text());
  });
}

int sl_config_validate(const sl_config* config) {
  return guard([&] {
    require(config, "config");
    config->value.validate();
  });
}

int sl_prepare_data(const sl_config* config, const sl_paths* paths, const char* out_dir,
                    sl_prepare_summary* summary) {
  return guard([&] {
    require(config, "config");
    require(paths, "paths");
    const ModelConfig& c = config->value;
    c.validate();
    const auto snli = required_path(paths->snli, "SNLI");
    const auto multinli = required_path(paths->multinli, "MultiNLI");
    std::vector<ClozeInstance> val, test;
    std::vector<Story> stories;
    if (optional_path(paths->sct_val)) val = load_cloze(required_path(paths->sct_val, "cloze validation"));
    if (optional_path(paths->sct_test)) test = load_cloze(required_path(paths->sct_test, "cloze test"));
    if (optional_path(paths->rocstories)) {
      stories = load_rocstories(required_path(paths->rocstories, "ROCStories"));
    }
    const fs::path out = output_dir(out_dir);

    const auto blend = blend_nli(snli, multinli, static_cast<std::size_t>(c.max_len),
                                 static_cast<std::size_t>(c.nli_val_size), c.seed);
    std::vector<const Tokens*> corpus;
    for (const auto* part : {&blend.train, &blend.val}) {
      for (const auto& p : *part) {
        corpus.push_back(&p.premise);
        corpus.push_back(&p.hypothesis);
      }
    }
    for (const auto* part : {&val, &test}) {
      for (const auto& inst : *part) {
        for (const auto& s : inst.plot) corpus.push_back(&s);
        for (const auto& e : inst.endings) corpus.push_back(&e);
      }
    }
    for (const auto& story : stories) {
      for (const auto& s : story.sentences) corpus.push_back(&s);
    }
    const auto vocab = Vocabulary::build(corpus, c.min_count);

    vocab.save(out / "vocab.txt");
    write_nli(out / "nli_train.jsonl", blend.train);
    write_nli(out / "nli_val.jsonl", blend.val);

    sl_prepare_summary s{};
    s.nli_read = blend.read;
    s.nli_unlabeled = blend.unlabeled;
    s.nli_too_long = blend.too_long;
    s.nli_malformed = blend.malformed;
    s.nli_train = blend.train.size();
    s.nli_val = blend.val.size();
    s.stories = stories.size();
    s.sct_val = val.size();
    s.sct_test = test.size();
    s.vocab_size = static_cast<size_t>(vocab.size());

    std::ostringstream report;
    report << "nli records read: " << s.nli_read << '\n'
           << "nli dropped unlabeled: " << s.nli_unlabeled << '\n'
           << "nli dropped too long: " << s.nli_too_long << '\n'
           << "nli skipped malformed: " << s.nli_malformed << '\n'
           << "nli train: " << s.nli_train << '\n'
           << "nli val: " << s.nli_val << '\n'
           << "rocstories: " << s.stories << '\n'
           << "cloze val: " << s.sct_val << '\n'
           << "cloze test: " << s.sct_test << '\n'
           << "vocabulary: " << s.vocab_size << '\n'
           << "vocabulary fingerprint: " << vocab_digest(vocab) << '\n';
    write_text(out / "prepare_report.txt", report.str());
    if (summary) *summary = s;
  });
}

int sl_pretrain_nli(const sl_config* config, const sl_paths* paths, const char* out_dir,
                    double* best_val_acc) {
  return guard([&] {
    require(config, "config");
    require(paths, "paths");
    const ModelConfig& c = config->value;
    c.validate();
    const auto vocab = Vocabulary::load(required_path(paths->vocab, "vocabulary"));
    NliBlend stats;
    // Blended files are already filtered; the length filter is a no-op here.
    const auto train = read_nli(required_path(paths->nli_train, "NLI train"),
                                static_cast<std::size_t>(c.max_len), stats);
    const auto val = read_nli(required_path(paths->nli_val, "NLI validation"),
                              static_cast<std::size_t>(c.max_len), stats);
    const auto emb = embeddings_for(c, *paths, vocab);
    const fs::path out = output_dir(out_dir);

    const auto result = pretrain_nli(train, val, c, vocab, emb ? &*emb : nullptr);
    save_checkpoint(result.checkpoint, out / "nli.ckpt");
    std::ostringstream report;
    report << "train pairs: " << train.size() << '\n'
           << "validation pairs: " << val.size() << '\n'
           << "best validation accuracy: " << format_double(result.best_val_acc) << '\n'
           << "best epoch: " << result.best_epoch << '\n'
           << "epoch\ttrain_loss\tval_acc\tclipped_steps\n";
    for (const auto& e : result.curve) {
      report << e.epoch << '\t' << format_double(e.train_loss) << '\t'
             << format_double(e.val_acc) << '\t' << e.clipped_steps << '\n';
    }
    write_text(out / "pretrain_report.txt", report.str());
    if (best_val_acc) *best_val_acc = result.best_val_acc;
  });
}

int sl_train_sct(const sl_config* config, const sl_paths* paths, const char* out_dir,
                 sl_cv_summary* summary) {
  return guard([&] {
    require(config, "config");
    require(paths, "paths");
    const ModelConfig& c = config->value;
    c.validate();
    auto in = load_sct_inputs(c, *paths);
    const fs::path out = output_dir(out_dir);
    CvOptions options;
    options.checkpoint_dir = out / "folds";
    const auto report = crossval_sct(in.train, in.test, in.pretrained ? &*in.pretrained : nullptr,
                                     c, in.vocab, in.embeddings ? &*in.embeddings : nullptr,
                                     options);
    write_text(out / "report.txt", format_report(report));
    write_text(out / "folds.tsv", format_fold_table(report));
    if (summary) *summary = summarize(report);
  });
}

int sl_ablate(const sl_config* config, const sl_paths* paths, const char* out_dir,
              sl_cv_summary* summaries) {
  return guard([&] {
    require(config, "config");
    require(paths, "paths");
    const ModelConfig& c = config->value;
    c.validate();
    auto in = load_sct_inputs(c, *paths);
    const fs::path out = output_dir(out_dir);
    CvOptions options;
    options.checkpoint_dir = out / "folds";
    const auto ablation = run_ablation(in.train, in.test, in.pretrained ? &*in.pretrained : nullptr,
                                       c, in.vocab, in.embeddings ? &*in.embeddings : nullptr,
                                       options);
    write_text(out / "ablation.txt", format_ablation(ablation));
    for (std::size_t i = 0; i < ablation.reports.size(); ++i) {
      const auto& r = ablation.reports[i];
      const std::string mode(to_string(r.mode));
      write_text(out / ("report_" + mode + ".txt"), format_report(r));
      write_text(out / ("folds_" + mode + ".tsv"), format_fold_table(r));
      if (summaries) summaries[i] = summarize(r);
    }
  });
}

int sl_evaluate(const char* const* checkpoints, size_t count, const sl_paths* paths,
                const char* out_dir, double* model_acc, double* ensemble_acc) {
  return guard([&] {
    require(paths, "paths");
    if (count == 0) throw UsageError("at least one checkpoint is required");
    require(checkpoints, "checkpoints");
    const auto vocab = Vocabulary::load(required_path(paths->vocab, "vocabulary"));
    const auto test = load_cloze(required_path(paths->sct_test, "cloze test"));
    std::vector<EncodedCloze> encoded;
    for (const auto& t : test) encoded.push_back(encode(t, vocab));

    std::vector<std::vector<int>> predictions;
    std::vector<std::string> names;
    for (size_t i = 0; i < count; ++i) {
      const auto path = required_path(checkpoints[i], "checkpoint");
      const auto model = model_from_checkpoint<float>(load_checkpoint(path, &vocab));
      std::vector<int> p;
      cloze_accuracy(model, encoded, &p);
      predictions.push_back(std::move(p));
      names.push_back(path.string());
    }
    const auto result = evaluate_predictions(predictions, encoded);
    if (const auto dir = optional_path(out_dir)) {
      fs::create_directories(*dir);
      std::ostringstream report;
      report << "test instances: " << encoded.size() << '\n' << "checkpoint\taccuracy\n";
      for (size_t i = 0; i < count; ++i) {
        report << names[i] << '\t' << format_double(result.model_acc[i]) << '\n';
      }
      report << "ensemble\t" << format_double(result.ensemble_acc) << '\n';
      write_text(*dir / "eval_report.txt", report.str());
    }
    if (model_acc) {
      for (size_t i = 0; i < count; ++i) model_acc[i] = result.model_acc[i];
    }
    if (ensemble_acc) *ensemble_acc = result.ensemble_acc;
  });
}

int sl_model_load(const char* checkpoint, const char* vocab_path, sl_model** out) {
  return guard([&] {
    require(out, "out");
    auto vocab = Vocabulary::load(required_path(vocab_path, "vocabulary"));
    const auto ckpt = load_checkpoint(required_path(checkpoint, "checkpoint"), &vocab);
    *out = new sl_model{std::move(vocab), model_from_checkpoint<float>(ckpt)};
  });
}

void sl_model_free(sl_model* model) { delete model; }

int sl_model_config(const sl_model* model, sl_config** out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    *out = new sl_config{model->model.config()};
  });
}

namespace {

std::array<std::vector<int>, 4> encode_plot(const sl_model& m, const char* const plot[4]) {
  require(plot, "plot");
  std::array<std::vector<int>, 4> ids;
  for (std::size_t i = 0; i < 4; ++i) {
    require(plot[i], "plot sentence");
    ids[i] = m.vocab.encode(tokenize(plot[i]));
    if (ids[i].empty()) throw InvalidArgument("plot sentence " + std::to_string(i + 1) + " is empty");
  }
  return ids;
}

std::vector<int> encode_sentence(const sl_model& m, const char* text, const char* what) {
  require(text, what);
  auto ids = m.vocab.encode(tokenize(text));
  if (ids.empty()) throw InvalidArgument(std::string(what) + " is empty");
  return ids;
}

}  // namespace

int sl_model_score(const sl_model* model, const char* const plot[4], const char* ending,
                   double* score) {
  return guard([&] {
    require(model, "model");
    require(score, "score");
    const auto p = encode_plot(*model, plot);
    *score = model->model.score_value(p, encode_sentence(*model, ending, "ending"));
  });
}

int sl_model_predict(const sl_model* model, const char* const plot[4], const char* ending1,
                     const char* ending2, double scores[2], int* choice) {
  return guard([&] {
    require(model, "model");
    EncodedCloze c;
    c.plot = encode_plot(*model, plot);
    c.endings[0] = encode_sentence(*model, ending1, "ending 1");
    c.endings[1] = encode_sentence(*model, ending2, "ending 2");
    const auto s = model->model.scores(c);
    if (scores) {
      scores[0] = s[0];
      scores[1] = s[1];
    }
    if (choice) *choice = choose_ending(s[0], s[1]);
  });
}

int sl_model_predict_file(const sl_model* model, const char* path, double scores[2],
                          int* choice, int* right_index) {
  return guard([&] {
    require(model, "model");
    const auto rows = load_cloze(required_path(path, "story file"));
    if (rows.size() != 1) {
      throw FormatError(std::string(path) + ": expected exactly one story, found " +
                       std::to_string(rows.size()));
    }
    const auto c = encode(rows[0], model->vocab);
    const auto s = model->model.scores(c);
    if (scores) {
      scores[0] = s[0];
      scores[1] = s[1];
    }
    if (choice) *choice = choose_ending(s[0], s[1]);
    if (right_index) *right_index = rows[0].right_index;
  });
}

}  // extern "C"
