#pragma once

// Hierarchical encoder: a word-level BiGRU whose states are pooled by
// ending-conditioned attention, then a sentence-level BiGRU run separately
// over the plot and over the ending.

#include "storylogic/esim.hpp"
#include "storylogic/layers.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace storylogic {

template <typename T>
class ContentNet {
 public:
  ContentNet(ParamStore<T>& store, const std::string& prefix, int vocab_size, int emb_dim,
             int hidden);

  // Word-level encoding of one unpadded sentence.
  EncodeResult encode_words(ad::Graph<T>& g, std::span<const int> sentence,
                            Dropout drop = {}) const;
  // Padded sentence; masked positions produce zero states.
  EncodeResult encode_words(ad::Graph<T>& g, std::span<const int> sentence,
                            std::span<const std::uint8_t> mask, Dropout drop = {}) const;

  // Final W-Enc state of the ending, [2H x 1].
  ad::Var ending_query(ad::Graph<T>& g, std::span<const int> ending, Dropout drop = {}) const;

  // Attention-weighted sum of the sentence's word states.
  AttentionResult sentence_vector(ad::Graph<T>& g, std::span<const int> sentence,
                                  ad::Var query, Dropout drop = {}) const;
  AttentionResult sentence_vector(ad::Graph<T>& g, std::span<const int> sentence,
                                  std::span<const std::uint8_t> mask, ad::Var query,
                                  Dropout drop = {}) const;

  struct Output {
    ad::Var query;
    std::array<AttentionResult, 5> sentences;  // plot 1..4, then the ending
    ad::Var plot_final;                        // u_p [2H x 1]
    ad::Var ending_final;                      // u_e [2H x 1]
    ad::Var content;                           // [u_p; u_e] [4H x 1]
  };

  Output forward(ad::Graph<T>& g, const std::array<std::vector<int>, 4>& plot,
                 const std::vector<int>& ending, Dropout drop = {}) const;

  Parameter<T>& embedding() const { return *embedding_; }
  int hidden() const { return hidden_; }

 private:
  AttentionResult attend(ad::Graph<T>& g, const EncodeResult& words, ad::Var query) const;
  AttentionResult attend(ad::Graph<T>& g, const EncodeResult& words,
                         std::span<const std::uint8_t> mask, ad::Var query) const;

  int hidden_;
  Parameter<T>* embedding_;
  BiGru<T> word_encoder_;
  Attention<T> attention_;
  BiGru<T> sentence_encoder_;
};

}  // namespace storylogic
