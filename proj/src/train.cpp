#include "storylogic/train.hpp"

#include "storylogic/error.hpp"
#include "storylogic/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace storylogic {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

AdamSettings adam_settings(const ModelConfig& config) {
  AdamSettings s;
  s.learning_rate = config.learning_rate;
  s.clip_norm = config.clip_norm;
  return s;
}

// One pass over `data` in seeded minibatches. `loss_of` builds the loss of a
// single example on a fresh graph. Returns the mean per-example loss.
template <typename Example, typename LossOf>
double run_epoch(ParamStore<float>& store, Adam<float>& adam, const std::vector<Example>& data,
                 int batch_size, std::mt19937_64& rng, int epoch, const LossOf& loss_of,
                 std::size_t& clipped) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  GradientSet<float> grads(store);
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    const float inv = 1.0f / static_cast<float>(end - start);
    grads.clear();
    for (std::size_t k = start; k < end; ++k) {
      ad::Graph<float> g(&grads);
      const ad::Var loss = loss_of(g, data[order[k]]);
      const double value = g.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(adam.steps() + 1) + ", example " +
                           std::to_string(order[k]));
      }
      total += value;
      g.backward(loss, inv);
    }
    try {
      if (adam.step(store, grads)) {
        ++clipped;
        log::debug("gradient clipped at step " + std::to_string(adam.steps()));
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(adam.steps() + 1) + ")");
    }
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

double extractor_distance(const ParamStore<float>& store,
                          const std::vector<Matrix<float>>& start) {
  double sq = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store[i].name.starts_with("esim.")) continue;
    sq += (store[i].value - start[i]).template cast<double>().squaredNorm();
  }
  return std::sqrt(sq);
}

std::vector<EncodedCloze> encode_all(const std::vector<ClozeInstance>& data,
                                     const Vocabulary& vocab) {
  std::vector<EncodedCloze> out;
  out.reserve(data.size());
  for (const auto& c : data) out.push_back(encode(c, vocab));
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double nli_accuracy(const NliModel<float>& model, const std::vector<EncodedNli>& data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : data) {
    if (model.predict(ex.premise, ex.hypothesis) == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

PretrainResult pretrain_nli(const std::vector<NliPair>& train, const std::vector<NliPair>& val,
                            const ModelConfig& config, const Vocabulary& vocab,
                            const EmbeddingMatrix* embeddings) {
  config.validate();
  if (train.empty()) throw UsageError("NLI training set is empty");
  if (val.empty()) throw UsageError("NLI validation set is empty");

  std::vector<EncodedNli> tr, va;
  for (const auto& p : train) tr.push_back(encode(p, vocab));
  for (const auto& p : val) va.push_back(encode(p, vocab));

  NliModel<float> model(config, static_cast<int>(vocab.size()));
  model.initialize(derive_seed(config.seed, 1), embeddings);
  Adam<float> adam(model.params(), adam_settings(config));
  std::mt19937_64 order_rng(derive_seed(config.seed, 2));
  std::mt19937_64 drop_rng(derive_seed(config.seed, 3));
  const Dropout drop{config.dropout, &drop_rng};

  PretrainResult result;
  result.best_val_acc = -1.0;
  auto best = model.params().snapshot();
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs_nli; ++epoch) {
    EpochStat stat;
    stat.epoch = epoch;
    stat.train_loss = run_epoch(
        model.params(), adam, tr, config.batch_size, order_rng, epoch,
        [&](ad::Graph<float>& g, const EncodedNli& ex) { return model.loss(g, ex, drop); },
        stat.clipped_steps);
    stat.val_acc = nli_accuracy(model, va);
    result.curve.push_back(stat);
    log::info("nli epoch " + std::to_string(epoch) + " loss " + fixed(stat.train_loss) +
              " val_acc " + fixed(stat.val_acc));
    if (stat.val_acc > result.best_val_acc) {
      result.best_val_acc = stat.val_acc;
      result.best_epoch = epoch;
      best = model.params().snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.params().restore(best);
  result.checkpoint = make_checkpoint(model.params(), config, vocab);
  return result;
}

std::vector<std::size_t> fold_sizes(std::size_t n, int k) {
  if (k < 2) throw UsageError("folds must be at least 2");
  const auto kk = static_cast<std::size_t>(k);
  if (n < kk) throw UsageError("cannot split " + std::to_string(n) + " instances into " +
                               std::to_string(k) + " folds");
  std::vector<std::size_t> sizes(kk, n / kk);
  for (std::size_t i = 0; i < n % kk; ++i) ++sizes[i];
  return sizes;
}

std::vector<std::vector<std::size_t>> assign_folds(std::size_t n, int k, std::uint64_t seed) {
  const auto sizes = fold_sizes(n, k);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds;
  std::size_t at = 0;
  for (std::size_t s : sizes) {
    folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                       order.begin() + static_cast<std::ptrdiff_t>(at + s));
    at += s;
  }
  return folds;
}

std::uint64_t fold_hash(const std::vector<ClozeInstance>& instances,
                        const std::vector<std::size_t>& members) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t m : members) {
    for (char c : instances.at(m).instance_id) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

double cloze_accuracy(const StoryModel<float>& model, const std::vector<EncodedCloze>& data,
                      std::vector<int>* predictions) {
  if (predictions) predictions->clear();
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& c : data) {
    const int p = model.predict(c);
    if (predictions) predictions->push_back(p);
    if (p == c.right_index) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

FoldResult train_fold(StoryModel<float>& model, const std::vector<EncodedCloze>& train,
                      const std::vector<EncodedCloze>& val, const ModelConfig& config,
                      std::uint64_t seed, const std::function<void(const EpochStat&)>& on_epoch) {
  if (train.empty()) throw UsageError("fold training set is empty");
  FoldResult result;
  result.train_size = train.size();
  result.val_size = val.size();

  auto& store = model.params();
  const auto start = store.snapshot();
  Adam<float> adam(store, adam_settings(config));
  std::mt19937_64 order_rng(derive_seed(seed, 1));
  std::mt19937_64 drop_rng(derive_seed(seed, 2));
  const Dropout drop{config.dropout, &drop_rng};

  auto best = start;
  double best_acc = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs_sct; ++epoch) {
    EpochStat stat;
    stat.epoch = epoch;
    stat.train_loss = run_epoch(
        store, adam, train, config.batch_size, order_rng, epoch,
        [&](ad::Graph<float>& g, const EncodedCloze& c) { return model.instance_loss(g, c, drop); },
        stat.clipped_steps);
    stat.val_acc = cloze_accuracy(model, val);
    result.curve.push_back(stat);
    if (on_epoch) on_epoch(stat);
    if (stat.val_acc > best_acc) {
      best_acc = stat.val_acc;
      result.best_epoch = epoch;
      best = store.snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  store.restore(best);
  result.val_acc = best_acc;
  result.extractor_delta = extractor_distance(store, start);
  return result;
}

CvReport crossval_sct(const std::vector<ClozeInstance>& instances,
                      const std::vector<ClozeInstance>& test, const Checkpoint* pretrained,
                      const ModelConfig& config, const Vocabulary& vocab,
                      const EmbeddingMatrix* embeddings, const CvOptions& options) {
  config.validate();
  if (config.uses_logic() && config.freeze_extractor && pretrained == nullptr) {
    throw UsageError("a frozen extractor needs a pretrained NLI checkpoint");
  }
  if (pretrained && config.uses_logic()) pretrained->check_vocabulary(vocab);
  if (test.empty()) throw UsageError("test set is empty");

  const auto folds = assign_folds(instances.size(), config.folds, derive_seed(config.seed, 10));
  const auto encoded = encode_all(instances, vocab);
  const auto encoded_test = encode_all(test, vocab);
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);
  if (config.uses_logic() && pretrained == nullptr) {
    log::warn("no pretrained extractor; the logic unit starts from random weights");
  }

  CvReport report;
  report.mode = config.mode;
  report.test_size = test.size();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<EncodedCloze> train, val;
    for (std::size_t o = 0; o < folds.size(); ++o) {
      for (std::size_t m : folds[o]) (o == f ? val : train).push_back(encoded[m]);
    }
    StoryModel<float> model(config, static_cast<int>(vocab.size()));
    model.initialize(derive_seed(config.seed, 100 + f), embeddings);
    if (pretrained && config.uses_logic()) model.load_extractor(*pretrained);

    FoldResult partial;
    partial.fold_id = static_cast<int>(f);
    partial.member_hash = fold_hash(instances, folds[f]);
    auto result = train_fold(model, train, val, config, derive_seed(config.seed, 200 + f),
                             [&](const EpochStat& stat) {
                               log::info("fold " + std::to_string(f) + " epoch " +
                                         std::to_string(stat.epoch) + " loss " +
                                         fixed(stat.train_loss) + " val_acc " +
                                         fixed(stat.val_acc));
                               if (options.on_epoch) options.on_epoch(partial, stat);
                             });
    result.fold_id = partial.fold_id;
    result.member_hash = partial.member_hash;
    result.test_acc = cloze_accuracy(model, encoded_test, &result.test_predictions);
    if (!options.checkpoint_dir.empty()) {
      save_checkpoint(make_checkpoint(model.params(), config, vocab),
                      options.checkpoint_dir / ("fold" + std::to_string(f) + ".ckpt"));
    }
    report.folds.push_back(std::move(result));
  }

  double sum = 0.0;
  for (const auto& r : report.folds) sum += r.test_acc;
  const double k = static_cast<double>(report.folds.size());
  report.mean_test_acc = sum / k;
  double sq = 0.0;
  for (const auto& r : report.folds) sq += (r.test_acc - report.mean_test_acc) * (r.test_acc - report.mean_test_acc);
  report.std_test_acc = k > 1 ? std::sqrt(sq / (k - 1)) : 0.0;

  std::vector<std::vector<int>> predictions;
  for (const auto& r : report.folds) predictions.push_back(r.test_predictions);
  report.ensemble_test_acc = evaluate_predictions(predictions, encoded_test).ensemble_acc;
  return report;
}

int majority_vote(const std::vector<int>& choices) {
  std::size_t first = 0, second = 0;
  for (int c : choices) {
    if (c == 1) ++first;
    else if (c == 2) ++second;
    else throw Error("ending choice must be 1 or 2");
  }
  return second > first ? 2 : 1;
}

EvalResult evaluate_predictions(const std::vector<std::vector<int>>& predictions,
                                const std::vector<EncodedCloze>& test) {
  if (predictions.empty()) throw UsageError("no models to evaluate");
  if (test.empty()) throw UsageError("test set is empty");
  EvalResult out;
  for (const auto& p : predictions) {
    if (p.size() != test.size()) throw MismatchError("prediction count differs from test size");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) hits += p[i] == test[i].right_index;
    out.model_acc.push_back(static_cast<double>(hits) / static_cast<double>(test.size()));
  }
  std::size_t hits = 0;
  std::vector<int> votes(predictions.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (std::size_t m = 0; m < predictions.size(); ++m) votes[m] = predictions[m][i];
    hits += majority_vote(votes) == test[i].right_index;
  }
  out.ensemble_acc = static_cast<double>(hits) / static_cast<double>(test.size());
  return out;
}

EvalResult evaluate(const std::vector<const StoryModel<float>*>& models,
                    const std::vector<EncodedCloze>& test) {
  std::vector<std::vector<int>> predictions;
  for (const auto* m : models) {
    std::vector<int> p;
    cloze_accuracy(*m, test, &p);
    predictions.push_back(std::move(p));
  }
  return evaluate_predictions(predictions, test);
}

AblationReport run_ablation(const std::vector<ClozeInstance>& instances,
                            const std::vector<ClozeInstance>& test,
                            const Checkpoint* pretrained, const ModelConfig& base,
                            const Vocabulary& vocab, const EmbeddingMatrix* embeddings,
                            const CvOptions& options) {
  AblationReport out;
  for (Mode mode : {Mode::full, Mode::cu_only, Mode::lu_only}) {
    ModelConfig config = base;
    config.mode = mode;
    CvOptions opts = options;
    if (!opts.checkpoint_dir.empty()) opts.checkpoint_dir /= to_string(mode);
    out.reports.push_back(crossval_sct(instances, test, pretrained, config, vocab, embeddings, opts));
  }
  return out;
}

std::string format_report(const CvReport& report) {
  std::ostringstream os;
  os << "mode: " << to_string(report.mode) << '\n';
  os << "folds: " << report.folds.size() << '\n';
  os << "test instances: " << report.test_size << '\n';
  os << "fold\ttrain\tval\tbest_epoch\tepochs\tval_acc\ttest_acc\tmembers\n";
  for (const auto& f : report.folds) {
    os << f.fold_id << '\t' << f.train_size << '\t' << f.val_size << '\t' << f.best_epoch << '\t'
       << f.curve.size() << '\t' << fixed(f.val_acc) << '\t' << fixed(f.test_acc) << '\t'
       << hex16(f.member_hash) << '\n';
  }
  os << "mean test accuracy: " << fixed(report.mean_test_acc) << '\n';
  os << "std test accuracy: " << fixed(report.std_test_acc) << '\n';
  os << "ensemble test accuracy: " << fixed(report.ensemble_test_acc) << '\n';
  os << "curves:\n";
  for (const auto& f : report.folds) {
    for (const auto& e : f.curve) {
      os << "  fold " << f.fold_id << " epoch " << e.epoch << " loss " << fixed(e.train_loss, 6)
         << " val_acc " << fixed(e.val_acc) << " clipped " << e.clipped_steps << '\n';
    }
  }
  return os.str();
}

std::string format_fold_table(const CvReport& report) {
  std::ostringstream os;
  os << "fold_id\tval_acc\ttest_acc\n";
  for (const auto& f : report.folds) {
    os << f.fold_id << '\t' << fixed(f.val_acc, 6) << '\t' << fixed(f.test_acc, 6) << '\n';
  }
  return os.str();
}

std::string format_ablation(const AblationReport& report) {
  std::ostringstream os;
  os << "mode\tmean_test_acc\tstd_test_acc\tensemble_test_acc\n";
  for (const auto& r : report.reports) {
    os << to_string(r.mode) << '\t' << fixed(r.mean_test_acc) << '\t' << fixed(r.std_test_acc)
       << '\t' << fixed(r.ensemble_test_acc) << '\n';
  }
  bool same = true;
  for (const auto& r : report.reports) {
    if (r.folds.size() != report.reports.front().folds.size()) same = false;
    for (std::size_t i = 0; same && i < r.folds.size(); ++i) {
      same = r.folds[i].member_hash == report.reports.front().folds[i].member_hash;
    }
  }
  os << "identical fold membership: " << (same ? "yes" : "no") << '\n';
  return os.str();
}

}  // namespace storylogic
