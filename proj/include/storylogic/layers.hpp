#pragma once

// Shared differentiable building blocks: embedding lookup, bidirectional GRU,
// additive attention, dense stacks and the two training losses.

#include "storylogic/autograd.hpp"
#include "storylogic/params.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace storylogic {

// Token ids [batch x time] with a {0,1} mask; every row needs one real token.
struct SequenceBatch {
  int batch = 0;
  int time = 0;
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;

  // Pads `rows` on the right with id 0 up to the longest row.
  static SequenceBatch from_rows(const std::vector<std::vector<int>>& rows);

  std::span<const int> row_ids(int b) const;
  std::span<const std::uint8_t> row_mask(int b) const;
  void validate() const;
};

template <typename T>
struct GruParams {
  Parameter<T>* w = nullptr;  // [3H x D]
  Parameter<T>* u = nullptr;  // [3H x H]
  Parameter<T>* b = nullptr;  // [3H x 1]
};

template <typename T>
struct BiGru {
  GruParams<T> forward;
  GruParams<T> backward;
  Eigen::Index input = 0;
  Eigen::Index hidden = 0;

  static BiGru create(ParamStore<T>& store, const std::string& prefix,
                      Eigen::Index input, Eigen::Index hidden);
};

enum class Activation { linear, tanh, relu };

template <typename T>
struct Dense {
  Parameter<T>* w = nullptr;  // [out x in]
  Parameter<T>* b = nullptr;  // [out x 1]
  Activation activation = Activation::linear;

  static Dense create(ParamStore<T>& store, const std::string& prefix,
                      Eigen::Index in, Eigen::Index out, Activation activation);
};

// score_t = v . tanh(W [key_t ; query])
template <typename T>
struct Attention {
  Parameter<T>* w = nullptr;  // [A x (Dk + Dq)]
  Parameter<T>* v = nullptr;  // [A x 1]
  Eigen::Index key_dim = 0;
  Eigen::Index query_dim = 0;

  static Attention create(ParamStore<T>& store, const std::string& prefix,
                          Eigen::Index key_dim, Eigen::Index query_dim,
                          Eigen::Index attn_dim);
};

// Initializes every parameter by its name suffix: ".W" and ".v" dense
// Glorot, ".U" orthogonal blocks, ".b" zeros. Other names are left alone.
template <typename T>
void initialize_by_role(ParamStore<T>& store, std::mt19937_64& rng);

// ---- graph-level building blocks ---------------------------------------

struct EncodeResult {
  ad::Var states;  // [2H x T], zero columns at masked positions
  ad::Var final;   // [2H x 1] = [forward at last real ; backward at first real]
};

template <typename T>
EncodeResult bigru_encode(ad::Graph<T>& g, const BiGru<T>& layer, ad::Var x,
                          std::span<const std::uint8_t> mask);

struct AttentionResult {
  ad::Var weights;  // [1 x T]
  ad::Var context;  // [Dk x 1]
};

template <typename T>
AttentionResult additive_attention(ad::Graph<T>& g, const Attention<T>& att,
                                   ad::Var query, ad::Var keys,
                                   std::span<const std::uint8_t> mask);

// Column-wise application of each layer in order.
template <typename T>
ad::Var mlp(ad::Graph<T>& g, std::span<const Dense<T>> layers, ad::Var x);

template <typename T>
ad::Var dense(ad::Graph<T>& g, const Dense<T>& layer, ad::Var x);

// max(0, margin - pos + neg) on 1x1 nodes.
template <typename T>
ad::Var hinge(ad::Graph<T>& g, ad::Var pos, ad::Var neg, T margin);

// Inverted dropout; identity when rate is 0 or rng is null.
template <typename T>
ad::Var dropout(ad::Graph<T>& g, ad::Var x, double rate, std::mt19937_64* rng);

// ---- batch-level evaluation (inference, no gradient) --------------------

// [B] arrays of [D x T] embeddings.
template <typename T>
std::vector<Matrix<T>> embed(const SequenceBatch& batch, const Parameter<T>& table);

template <typename T>
struct BatchEncoding {
  std::vector<Matrix<T>> states;  // [2H x T] per row
  std::vector<Matrix<T>> final;   // [2H x 1] per row
};

template <typename T>
BatchEncoding<T> bigru_encode(const std::vector<Matrix<T>>& inputs,
                              const SequenceBatch& batch, const BiGru<T>& layer);

// ---- scalar losses -------------------------------------------------------

double cross_entropy(std::span<const double> logits, int label);
double hinge_loss(double pos, double neg, double margin = 1.0);

}  // namespace storylogic
