#pragma once

// ESIM-structured sentence-pair model with GRU encoders. The full network is
// a 3-way NLI classifier; without its output layer it is the logic
// extractor whose tanh hidden activation feeds the Logic Unit.

#include "storylogic/autograd.hpp"
#include "storylogic/checkpoint.hpp"
#include "storylogic/config.hpp"
#include "storylogic/data.hpp"
#include "storylogic/layers.hpp"

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace storylogic {

struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

template <typename T>
class EsimNet {
 public:
  // `with_classifier` adds the 3-way output layer ("<prefix>.out").
  EsimNet(ParamStore<T>& store, const std::string& prefix, int vocab_size, int emb_dim,
          int hidden, bool with_classifier);

  struct Output {
    ad::Var encoded_a;  // [2H x La]
    ad::Var encoded_b;  // [2H x Lb]
    ad::Var energies;   // [La x Lb], e_ij = a_i . b_j
    ad::Var align_a;    // [La x Lb], softmax over j
    ad::Var align_b;    // [Lb x La], softmax over i
    ad::Var aligned_a;  // [2H x La]
    ad::Var aligned_b;  // [2H x Lb]
    ad::Var pooled;     // [8H x 1] = [avg_a; max_a; avg_b; max_b]
    ad::Var logic;      // [H x 1] tanh hidden activation
    ad::Var logits;     // [3 x 1], invalid without the classifier
  };

  Output forward(ad::Graph<T>& g, std::span<const int> premise,
                 std::span<const std::uint8_t> premise_mask,
                 std::span<const int> hypothesis,
                 std::span<const std::uint8_t> hypothesis_mask, Dropout drop = {}) const;

  // Unpadded sequences.
  Output forward(ad::Graph<T>& g, const std::vector<int>& premise,
                 const std::vector<int>& hypothesis, Dropout drop = {}) const;

  // The extractor: tanh hidden activation only.
  ad::Var extract_logic(ad::Graph<T>& g, const std::vector<int>& premise,
                        const std::vector<int>& hypothesis, Dropout drop = {}) const;

  Parameter<T>& embedding() const { return *embedding_; }
  const Dense<T>& output_layer() const { return output_; }
  int hidden() const { return hidden_; }
  bool has_classifier() const { return with_classifier_; }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
  int hidden_;
  bool with_classifier_;
  Parameter<T>* embedding_;
  BiGru<T> encoder_;
  Dense<T> projection_;
  BiGru<T> composer_;
  Dense<T> hidden_layer_;
  Dense<T> output_;
};

struct EncodedNli {
  std::vector<int> premise;
  std::vector<int> hypothesis;
  int label = 0;
};

EncodedNli encode(const NliPair& pair, const Vocabulary& vocab);

// Standalone NLI classifier used for pretraining.
template <typename T>
class NliModel {
 public:
  NliModel(const ModelConfig& config, int vocab_size);
  NliModel(NliModel&&) noexcept = default;

  // Seeded init; embedding rows copied from `embeddings` when given.
  void initialize(std::uint64_t seed, const EmbeddingMatrix* embeddings);

  ad::Var loss(ad::Graph<T>& g, const EncodedNli& example, Dropout drop = {}) const;
  // Softmax over (entailment, neutral, contradiction).
  std::array<double, 3> classify(const std::vector<int>& premise,
                                 const std::vector<int>& hypothesis) const;
  int predict(const std::vector<int>& premise, const std::vector<int>& hypothesis) const;

  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  const EsimNet<T>& net() const { return net_; }
  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }

 private:
  ModelConfig config_;
  int vocab_size_;
  ParamStore<T> store_;
  EsimNet<T> net_;
};

// Copies a pretrained table (float) into an embedding parameter.
template <typename T>
void assign_embeddings(Parameter<T>& table, const EmbeddingMatrix& embeddings);

}  // namespace storylogic
