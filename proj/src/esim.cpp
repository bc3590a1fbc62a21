#include "storylogic/esim.hpp"

#include "storylogic/error.hpp"

#include <cmath>

namespace storylogic {

namespace {

std::vector<std::uint8_t> ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

}  // namespace

template <typename T>
void assign_embeddings(Parameter<T>& table, const EmbeddingMatrix& embeddings) {
  if (embeddings.matrix.rows() != table.value.rows() ||
      embeddings.matrix.cols() != table.value.cols()) {
    throw MismatchError("embedding matrix is " + std::to_string(embeddings.matrix.rows()) +
                        "x" + std::to_string(embeddings.matrix.cols()) + ", table " +
                        table.name + " is " + std::to_string(table.value.rows()) + "x" +
                        std::to_string(table.value.cols()));
  }
  table.value = embeddings.matrix.cast<T>();
  table.value.row(Vocabulary::kPad).setZero();
}

template <typename T>
EsimNet<T>::EsimNet(ParamStore<T>& store, const std::string& prefix, int vocab_size,
                    int emb_dim, int hidden, bool with_classifier)
    : prefix_(prefix), hidden_(hidden), with_classifier_(with_classifier) {
  embedding_ = &store.add(prefix + ".embedding", vocab_size, emb_dim);
  embedding_->frozen_row = Vocabulary::kPad;
  encoder_ = BiGru<T>::create(store, prefix + ".enc", emb_dim, hidden);
  projection_ = Dense<T>::create(store, prefix + ".proj", 8 * hidden, hidden, Activation::relu);
  composer_ = BiGru<T>::create(store, prefix + ".comp", hidden, hidden);
  hidden_layer_ =
      Dense<T>::create(store, prefix + ".hidden", 8 * hidden, hidden, Activation::tanh);
  if (with_classifier) {
    output_ = Dense<T>::create(store, prefix + ".out", hidden, 3, Activation::linear);
  }
}

template <typename T>
typename EsimNet<T>::Output EsimNet<T>::forward(
    ad::Graph<T>& g, std::span<const int> premise, std::span<const std::uint8_t> premise_mask,
    std::span<const int> hypothesis, std::span<const std::uint8_t> hypothesis_mask,
    Dropout drop) const {
  if (premise.size() != premise_mask.size() || hypothesis.size() != hypothesis_mask.size()) {
    throw MismatchError("esim: ids and mask lengths differ");
  }
  Output out;
  const ad::Var xa = dropout(g, g.lookup(*embedding_, premise), drop.rate, drop.rng);
  const ad::Var xb = dropout(g, g.lookup(*embedding_, hypothesis), drop.rate, drop.rng);

  out.encoded_a = bigru_encode(g, encoder_, xa, premise_mask).states;
  out.encoded_b = bigru_encode(g, encoder_, xb, hypothesis_mask).states;

  out.energies = ad::matmul_tn(g, out.encoded_a, out.encoded_b);
  out.align_a = ad::softmax_rows(g, out.energies, hypothesis_mask);
  out.align_b = ad::softmax_rows(g, ad::transpose(g, out.energies), premise_mask);
  out.aligned_a = ad::matmul(g, out.encoded_b, ad::transpose(g, out.align_a));
  out.aligned_b = ad::matmul(g, out.encoded_a, ad::transpose(g, out.align_b));

  auto compose = [&](ad::Var encoded, ad::Var aligned, std::span<const std::uint8_t> mask) {
    const ad::Var parts[] = {encoded, aligned, ad::sub(g, encoded, aligned),
                             ad::cmul(g, encoded, aligned)};
    const ad::Var enhanced = ad::concat_rows<T>(g, parts);
    const ad::Var projected = dense(g, projection_, enhanced);
    const ad::Var composed = bigru_encode(g, composer_, projected, mask).states;
    return std::array<ad::Var, 2>{ad::mean_cols(g, composed, mask),
                                  ad::max_cols(g, composed, mask)};
  };
  const auto pooled_a = compose(out.encoded_a, out.aligned_a, premise_mask);
  const auto pooled_b = compose(out.encoded_b, out.aligned_b, hypothesis_mask);
  const ad::Var pooled[] = {pooled_a[0], pooled_a[1], pooled_b[0], pooled_b[1]};
  out.pooled = ad::concat_rows<T>(g, pooled);

  out.logic = dense(g, hidden_layer_, dropout(g, out.pooled, drop.rate, drop.rng));
  if (with_classifier_) {
    out.logits = dense(g, output_, dropout(g, out.logic, drop.rate, drop.rng));
  }
  return out;
}

template <typename T>
typename EsimNet<T>::Output EsimNet<T>::forward(ad::Graph<T>& g,
                                                const std::vector<int>& premise,
                                                const std::vector<int>& hypothesis,
                                                Dropout drop) const {
  const auto pm = ones(premise.size());
  const auto hm = ones(hypothesis.size());
  return forward(g, premise, pm, hypothesis, hm, drop);
}

template <typename T>
ad::Var EsimNet<T>::extract_logic(ad::Graph<T>& g, const std::vector<int>& premise,
                                  const std::vector<int>& hypothesis, Dropout drop) const {
  return forward(g, premise, hypothesis, drop).logic;
}

EncodedNli encode(const NliPair& pair, const Vocabulary& vocab) {
  return EncodedNli{vocab.encode(pair.premise), vocab.encode(pair.hypothesis),
                    static_cast<int>(pair.label)};
}

template <typename T>
NliModel<T>::NliModel(const ModelConfig& config, int vocab_size)
    : config_(config),
      vocab_size_(vocab_size),
      net_(store_, "esim", vocab_size, config.emb_dim, config.esim_hidden, true) {
  config_.validate();
  net_.embedding().trainable = config_.train_embeddings;
}

template <typename T>
void NliModel<T>::initialize(std::uint64_t seed, const EmbeddingMatrix* embeddings) {
  std::mt19937_64 rng(seed);
  initialize_by_role(store_, rng);
  if (embeddings != nullptr) {
    assign_embeddings(net_.embedding(), *embeddings);
  } else {
    init::uniform(net_.embedding().value, -0.05, 0.05, rng);
    net_.embedding().value.row(Vocabulary::kPad).setZero();
  }
}

template <typename T>
ad::Var NliModel<T>::loss(ad::Graph<T>& g, const EncodedNli& example, Dropout drop) const {
  const auto out = net_.forward(g, example.premise, example.hypothesis, drop);
  return ad::cross_entropy(g, out.logits, example.label);
}

template <typename T>
std::array<double, 3> NliModel<T>::classify(const std::vector<int>& premise,
                                            const std::vector<int>& hypothesis) const {
  ad::Graph<T> g;
  const auto out = net_.forward(g, premise, hypothesis);
  const auto& z = g.value(out.logits);
  const double top = static_cast<double>(z.maxCoeff());
  std::array<double, 3> p{};
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    p[k] = std::exp(static_cast<double>(z(k, 0)) - top);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

template <typename T>
int NliModel<T>::predict(const std::vector<int>& premise,
                         const std::vector<int>& hypothesis) const {
  const auto p = classify(premise, hypothesis);
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

template void assign_embeddings<float>(Parameter<float>&, const EmbeddingMatrix&);
template void assign_embeddings<double>(Parameter<double>&, const EmbeddingMatrix&);
template class EsimNet<float>;
template class EsimNet<double>;
template class NliModel<float>;
template class NliModel<double>;

}  // namespace storylogic
