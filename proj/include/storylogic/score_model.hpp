#pragma once

// The story-ending scorer: content vector and/or logic flow into a tanh MLP
// with a scalar linear output, trained with the pairwise hinge objective.

#include "storylogic/checkpoint.hpp"
#include "storylogic/config.hpp"
#include "storylogic/content_unit.hpp"
#include "storylogic/data.hpp"
#include "storylogic/esim.hpp"
#include "storylogic/logic_unit.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace storylogic {

struct EncodedCloze {
  std::string instance_id;
  std::array<std::vector<int>, 4> plot;
  std::array<std::vector<int>, 2> endings;
  int right_index = 1;
};

EncodedCloze encode(const ClozeInstance& instance, const Vocabulary& vocab);

// Higher score wins; an exact tie goes to ending 1.
inline int choose_ending(double first, double second) { return second > first ? 2 : 1; }

// What one score() evaluation touched. Filled only when requested.
struct ScoreTrace {
  int extractor_calls = 0;
  int content_calls = 0;
  Eigen::VectorXd content;                    // V_c
  std::vector<Eigen::VectorXd> logic_vectors;  // u_{l,i}
  Eigen::VectorXd logic_flow;                 // V_l
  double score = 0.0;
};

template <typename T>
class StoryModel {
 public:
  StoryModel(const ModelConfig& config, int vocab_size);
  StoryModel(StoryModel&&) noexcept = default;

  // Seeded init of every parameter. Both embedding tables start from
  // `embeddings` when given.
  void initialize(std::uint64_t seed, const EmbeddingMatrix* embeddings);

  // Copies the pretrained extractor (every "esim." array except the NLI
  // output layer). Returns the number of arrays loaded.
  std::size_t load_extractor(const Checkpoint& pretrained);

  struct LogicOutput {
    std::array<ad::Var, 4> logic_vectors;
    ad::Var tracker_states;
    ad::Var flow;
  };

  LogicOutput logic_flow(ad::Graph<T>& g, const std::array<std::vector<int>, 4>& plot,
                         const std::vector<int>& ending, Dropout drop = {},
                         ScoreTrace* trace = nullptr) const;

  // S for one (plot, ending). 1x1 node.
  ad::Var score(ad::Graph<T>& g, const std::array<std::vector<int>, 4>& plot,
                const std::vector<int>& ending, Dropout drop = {},
                ScoreTrace* trace = nullptr) const;

  // max(0, margin - S+ + S-), both endings scored with the same parameters.
  ad::Var instance_loss(ad::Graph<T>& g, const EncodedCloze& instance,
                        Dropout drop = {}) const;

  double score_value(const std::array<std::vector<int>, 4>& plot,
                     const std::vector<int>& ending, ScoreTrace* trace = nullptr) const;
  std::array<double, 2> scores(const EncodedCloze& instance) const;
  int predict(const EncodedCloze& instance) const;

  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }

  const ContentNet<T>* content() const { return content_ ? &*content_ : nullptr; }
  const EsimNet<T>* extractor() const { return extractor_ ? &*extractor_ : nullptr; }
  const LogicTracker<T>* tracker() const { return tracker_ ? &*tracker_ : nullptr; }
  const std::array<Dense<T>, 2>& scorer() const { return scorer_; }

 private:
  ModelConfig config_;
  int vocab_size_;
  ParamStore<T> store_;
  std::optional<ContentNet<T>> content_;
  std::optional<EsimNet<T>> extractor_;
  std::optional<LogicTracker<T>> tracker_;
  std::array<Dense<T>, 2> scorer_;
};

// Builds a model from a checkpoint's config and arrays.
template <typename T>
StoryModel<T> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace storylogic
