#include "storylogic/content_unit.hpp"

#include "storylogic/error.hpp"

namespace storylogic {

template <typename T>
ContentNet<T>::ContentNet(ParamStore<T>& store, const std::string& prefix, int vocab_size,
                          int emb_dim, int hidden)
    : hidden_(hidden) {
  embedding_ = &store.add(prefix + ".embedding", vocab_size, emb_dim);
  embedding_->frozen_row = Vocabulary::kPad;
  word_encoder_ = BiGru<T>::create(store, prefix + ".wenc", emb_dim, hidden);
  // Attention width follows the GRU width.
  attention_ = Attention<T>::create(store, prefix + ".attn", 2 * hidden, 2 * hidden, hidden);
  sentence_encoder_ = BiGru<T>::create(store, prefix + ".senc", 2 * hidden, hidden);
}

template <typename T>
EncodeResult ContentNet<T>::encode_words(ad::Graph<T>& g, std::span<const int> sentence,
                                         Dropout drop) const {
  const std::vector<std::uint8_t> mask(sentence.size(), 1);
  return encode_words(g, sentence, mask, drop);
}

template <typename T>
EncodeResult ContentNet<T>::encode_words(ad::Graph<T>& g, std::span<const int> sentence,
                                         std::span<const std::uint8_t> mask,
                                         Dropout drop) const {
  if (sentence.empty()) throw MismatchError("content unit: empty sentence");
  if (mask.size() != sentence.size()) throw MismatchError("content unit: mask length differs");
  const ad::Var x = dropout(g, g.lookup(*embedding_, sentence), drop.rate, drop.rng);
  return bigru_encode(g, word_encoder_, x, mask);
}

template <typename T>
ad::Var ContentNet<T>::ending_query(ad::Graph<T>& g, std::span<const int> ending,
                                    Dropout drop) const {
  if (ending.empty()) throw MismatchError("content unit: empty ending");
  return encode_words(g, ending, drop).final;
}

template <typename T>
AttentionResult ContentNet<T>::attend(ad::Graph<T>& g, const EncodeResult& words,
                                      ad::Var query) const {
  const std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.value(words.states).cols()),
                                       1);
  return attend(g, words, mask, query);
}

template <typename T>
AttentionResult ContentNet<T>::attend(ad::Graph<T>& g, const EncodeResult& words,
                                      std::span<const std::uint8_t> mask, ad::Var query) const {
  return additive_attention(g, attention_, query, words.states, mask);
}

template <typename T>
AttentionResult ContentNet<T>::sentence_vector(ad::Graph<T>& g, std::span<const int> sentence,
                                               ad::Var query, Dropout drop) const {
  return attend(g, encode_words(g, sentence, drop), query);
}

template <typename T>
AttentionResult ContentNet<T>::sentence_vector(ad::Graph<T>& g, std::span<const int> sentence,
                                               std::span<const std::uint8_t> mask,
                                               ad::Var query, Dropout drop) const {
  return attend(g, encode_words(g, sentence, mask, drop), mask, query);
}

template <typename T>
typename ContentNet<T>::Output ContentNet<T>::forward(
    ad::Graph<T>& g, const std::array<std::vector<int>, 4>& plot,
    const std::vector<int>& ending, Dropout drop) const {
  if (ending.empty()) throw MismatchError("content unit: empty ending");
  Output out;
  // One W-Enc pass over the ending serves as both query and attended keys.
  const EncodeResult ending_words = encode_words(g, ending, drop);
  out.query = ending_words.final;
  for (std::size_t i = 0; i < 4; ++i) {
    out.sentences[i] = sentence_vector(g, plot[i], out.query, drop);
  }
  out.sentences[4] = attend(g, ending_words, out.query);

  const std::vector<std::uint8_t> plot_mask(4, 1);
  const std::vector<std::uint8_t> ending_mask(1, 1);
  const ad::Var plot_vectors[] = {out.sentences[0].context, out.sentences[1].context,
                                  out.sentences[2].context, out.sentences[3].context};
  out.plot_final =
      bigru_encode(g, sentence_encoder_, ad::concat_cols<T>(g, plot_vectors), plot_mask).final;
  out.ending_final =
      bigru_encode(g, sentence_encoder_, out.sentences[4].context, ending_mask).final;
  const ad::Var halves[] = {out.plot_final, out.ending_final};
  out.content = ad::concat_rows<T>(g, halves);
  return out;
}

template class ContentNet<float>;
template class ContentNet<double>;

}  // namespace storylogic
