#include "storylogic/score_model.hpp"

#include "storylogic/error.hpp"

#include <cmath>

namespace storylogic {

namespace {

template <typename T>
Eigen::VectorXd to_vector(const Matrix<T>& m) {
  return Eigen::Map<const Matrix<T>>(m.data(), m.size(), 1).template cast<double>();
}

}  // namespace

EncodedCloze encode(const ClozeInstance& instance, const Vocabulary& vocab) {
  EncodedCloze out;
  out.instance_id = instance.instance_id;
  for (std::size_t i = 0; i < 4; ++i) out.plot[i] = vocab.encode(instance.plot[i]);
  for (std::size_t i = 0; i < 2; ++i) out.endings[i] = vocab.encode(instance.endings[i]);
  out.right_index = instance.right_index;
  return out;
}

template <typename T>
StoryModel<T>::StoryModel(const ModelConfig& config, int vocab_size)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size < 2) throw UsageError("vocabulary must hold at least the reserved ids");
  if (config_.uses_content()) {
    content_.emplace(store_, "cu", vocab_size, config_.emb_dim, config_.cu_hidden);
    content_->embedding().trainable = config_.train_embeddings;
  }
  if (config_.uses_logic()) {
    extractor_.emplace(store_, "esim", vocab_size, config_.emb_dim, config_.esim_hidden,
                       false);
    extractor_->embedding().trainable = config_.train_embeddings;
    if (config_.freeze_extractor) store_.set_trainable("esim.", false);
    tracker_.emplace(store_, "lu.tracker", config_.esim_hidden, config_.tracker_hidden);
  }
  scorer_[0] = Dense<T>::create(store_, "score.hidden", config_.scorer_input(),
                                config_.scorer_hidden, Activation::tanh);
  scorer_[1] = Dense<T>::create(store_, "score.out", config_.scorer_hidden, 1,
                                Activation::linear);
}

template <typename T>
void StoryModel<T>::initialize(std::uint64_t seed, const EmbeddingMatrix* embeddings) {
  std::mt19937_64 rng(seed);
  initialize_by_role(store_, rng);
  for (Parameter<T>* table : {content_ ? &content_->embedding() : nullptr,
                              extractor_ ? &extractor_->embedding() : nullptr}) {
    if (table == nullptr) continue;
    if (embeddings != nullptr) {
      assign_embeddings(*table, *embeddings);
    } else {
      init::uniform(table->value, -0.05, 0.05, rng);
      table->value.row(Vocabulary::kPad).setZero();
    }
  }
}

template <typename T>
std::size_t StoryModel<T>::load_extractor(const Checkpoint& pretrained) {
  if (!extractor_) return 0;
  return apply_checkpoint(store_, pretrained, "esim.", true);
}

template <typename T>
typename StoryModel<T>::LogicOutput StoryModel<T>::logic_flow(
    ad::Graph<T>& g, const std::array<std::vector<int>, 4>& plot,
    const std::vector<int>& ending, Dropout drop, ScoreTrace* trace) const {
  if (!extractor_) throw MismatchError("logic flow requested in cu_only mode");
  LogicOutput out;
  const auto pairs = pair_plot_with_ending(plot, ending);
  for (std::size_t i = 0; i < 4; ++i) {
    out.logic_vectors[i] = extractor_->extract_logic(g, pairs[i].first, pairs[i].second, drop);
    if (trace != nullptr) {
      ++trace->extractor_calls;
      trace->logic_vectors.push_back(to_vector(g.value(out.logic_vectors[i])));
    }
  }
  const auto tracked = tracker_->forward(g, out.logic_vectors);
  out.tracker_states = tracked.states;
  out.flow = tracked.flow;
  if (trace != nullptr) trace->logic_flow = to_vector(g.value(out.flow));
  return out;
}

template <typename T>
ad::Var StoryModel<T>::score(ad::Graph<T>& g, const std::array<std::vector<int>, 4>& plot,
                             const std::vector<int>& ending, Dropout drop,
                             ScoreTrace* trace) const {
  if (ending.empty()) throw MismatchError("score: empty ending");
  for (const auto& s : plot) {
    if (s.empty()) throw MismatchError("score: empty plot sentence");
  }
  std::vector<ad::Var> features;
  if (content_) {
    const auto cu = content_->forward(g, plot, ending, drop);
    features.push_back(cu.content);
    if (trace != nullptr) {
      ++trace->content_calls;
      trace->content = to_vector(g.value(cu.content));
    }
  }
  if (extractor_) features.push_back(logic_flow(g, plot, ending, drop, trace).flow);
  const ad::Var joint = ad::concat_rows<T>(g, features);
  if (g.value(joint).rows() != config_.scorer_input()) {
    throw MismatchError("score: feature width does not match the scorer input");
  }
  const ad::Var hidden = dense(g, scorer_[0], dropout(g, joint, drop.rate, drop.rng));
  const ad::Var s = dense(g, scorer_[1], hidden);
  const T value = g.scalar(s);
  if (!std::isfinite(static_cast<double>(value))) throw NumericError("score is not finite");
  if (trace != nullptr) trace->score = static_cast<double>(value);
  return s;
}

template <typename T>
ad::Var StoryModel<T>::instance_loss(ad::Graph<T>& g, const EncodedCloze& instance,
                                     Dropout drop) const {
  if (instance.right_index != 1 && instance.right_index != 2) {
    throw MismatchError("right_index must be 1 or 2");
  }
  const ad::Var pos = score(g, instance.plot, instance.endings[instance.right_index - 1], drop);
  const ad::Var neg = score(g, instance.plot, instance.endings[2 - instance.right_index], drop);
  return hinge(g, pos, neg, static_cast<T>(config_.margin));
}

template <typename T>
double StoryModel<T>::score_value(const std::array<std::vector<int>, 4>& plot,
                                  const std::vector<int>& ending, ScoreTrace* trace) const {
  ad::Graph<T> g;
  return static_cast<double>(g.scalar(score(g, plot, ending, {}, trace)));
}

template <typename T>
std::array<double, 2> StoryModel<T>::scores(const EncodedCloze& instance) const {
  return {score_value(instance.plot, instance.endings[0]),
          score_value(instance.plot, instance.endings[1])};
}

template <typename T>
int StoryModel<T>::predict(const EncodedCloze& instance) const {
  const auto s = scores(instance);
  return choose_ending(s[0], s[1]);
}

template <typename T>
StoryModel<T> model_from_checkpoint(const Checkpoint& ckpt) {
  StoryModel<T> model(ckpt.config, static_cast<int>(ckpt.vocab_size));
  apply_checkpoint(model.params(), ckpt, "", true);
  return model;
}

template class StoryModel<float>;
template class StoryModel<double>;
template StoryModel<float> model_from_checkpoint<float>(const Checkpoint&);
template StoryModel<double> model_from_checkpoint<double>(const Checkpoint&);

}  // namespace storylogic
