#pragma once

// NLI pretraining, k-fold cross-validation on the cloze set, evaluation and
// the three-mode ablation.

#include "storylogic/checkpoint.hpp"
#include "storylogic/config.hpp"
#include "storylogic/data.hpp"
#include "storylogic/esim.hpp"
#include "storylogic/score_model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace storylogic {

struct EpochStat {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-example loss over the epoch
  double val_acc = 0.0;
  std::size_t clipped_steps = 0;
};

struct PretrainResult {
  double best_val_acc = 0.0;
  int best_epoch = 0;
  std::vector<EpochStat> curve;
  Checkpoint checkpoint;  // parameters from the best epoch
};

// Cross-entropy training of the NLI classifier with Adam. The checkpoint
// holds the parameters of the epoch with the highest validation accuracy;
// training stops after `patience` epochs without improvement or at
// `max_epochs_nli`.
PretrainResult pretrain_nli(const std::vector<NliPair>& train, const std::vector<NliPair>& val,
                            const ModelConfig& config, const Vocabulary& vocab,
                            const EmbeddingMatrix* embeddings);

double nli_accuracy(const NliModel<float>& model, const std::vector<EncodedNli>& data);

// Sizes of k near-equal folds; the first n mod k folds get one extra item.
std::vector<std::size_t> fold_sizes(std::size_t n, int k);

// Seeded shuffle of [0, n) cut into fold_sizes(n, k) chunks.
std::vector<std::vector<std::size_t>> assign_folds(std::size_t n, int k, std::uint64_t seed);

// FNV-1a over the member instance ids in fold order.
std::uint64_t fold_hash(const std::vector<ClozeInstance>& instances,
                        const std::vector<std::size_t>& members);

struct FoldResult {
  int fold_id = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::uint64_t member_hash = 0;
  std::vector<EpochStat> curve;
  int best_epoch = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::vector<int> test_predictions;
  double extractor_delta = 0.0;  // L2 distance of extractor weights from their start
};

struct CvReport {
  Mode mode = Mode::full;
  std::vector<FoldResult> folds;
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;  // sample standard deviation over folds
  double ensemble_test_acc = 0.0;
  std::size_t test_size = 0;
};

struct CvOptions {
  // When set, the selected model of fold f is saved as fold<f>.ckpt here.
  std::filesystem::path checkpoint_dir;
  // Called after every epoch of every fold.
  std::function<void(const FoldResult&, const EpochStat&)> on_epoch;
};

// Trains a model on one split and returns the selected (best fold-val)
// model's results. `model` ends holding the selected parameters.
FoldResult train_fold(StoryModel<float>& model, const std::vector<EncodedCloze>& train,
                      const std::vector<EncodedCloze>& val, const ModelConfig& config,
                      std::uint64_t seed,
                      const std::function<void(const EpochStat&)>& on_epoch = {});

double cloze_accuracy(const StoryModel<float>& model, const std::vector<EncodedCloze>& data,
                      std::vector<int>* predictions = nullptr);

// k = config.folds. `pretrained` may be null: the extractor then starts from
// random weights (rejected when the extractor is also frozen).
CvReport crossval_sct(const std::vector<ClozeInstance>& instances,
                      const std::vector<ClozeInstance>& test, const Checkpoint* pretrained,
                      const ModelConfig& config, const Vocabulary& vocab,
                      const EmbeddingMatrix* embeddings, const CvOptions& options = {});

struct EvalResult {
  std::vector<double> model_acc;
  double ensemble_acc = 0.0;
};

// Majority vote over per-model choices; a tied vote picks ending 1.
int majority_vote(const std::vector<int>& choices);

EvalResult evaluate_predictions(const std::vector<std::vector<int>>& predictions,
                                const std::vector<EncodedCloze>& test);
EvalResult evaluate(const std::vector<const StoryModel<float>*>& models,
                    const std::vector<EncodedCloze>& test);

struct AblationReport {
  std::vector<CvReport> reports;  // full, cu_only, lu_only
};

AblationReport run_ablation(const std::vector<ClozeInstance>& instances,
                            const std::vector<ClozeInstance>& test,
                            const Checkpoint* pretrained, const ModelConfig& base,
                            const Vocabulary& vocab, const EmbeddingMatrix* embeddings,
                            const CvOptions& options = {});

// Human-readable report and the per-fold table (fold_id, val_acc, test_acc).
std::string format_report(const CvReport& report);
std::string format_fold_table(const CvReport& report);
std::string format_ablation(const AblationReport& report);

// splitmix64-based seed derivation for independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace storylogic
