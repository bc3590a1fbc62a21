#include "storylogic/layers.hpp"

#include "storylogic/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace storylogic {

SequenceBatch SequenceBatch::from_rows(const std::vector<std::vector<int>>& rows) {
  SequenceBatch out;
  out.batch = static_cast<int>(rows.size());
  for (const auto& r : rows) out.time = std::max(out.time, static_cast<int>(r.size()));
  out.ids.assign(static_cast<std::size_t>(out.batch) * out.time, 0);
  out.mask.assign(out.ids.size(), 0);
  for (int b = 0; b < out.batch; ++b) {
    for (std::size_t t = 0; t < rows[b].size(); ++t) {
      out.ids[b * out.time + t] = rows[b][t];
      out.mask[b * out.time + t] = 1;
    }
  }
  return out;
}

std::span<const int> SequenceBatch::row_ids(int b) const {
  return std::span<const int>(ids).subspan(static_cast<std::size_t>(b) * time, time);
}

std::span<const std::uint8_t> SequenceBatch::row_mask(int b) const {
  return std::span<const std::uint8_t>(mask).subspan(static_cast<std::size_t>(b) * time,
                                                     time);
}

void SequenceBatch::validate() const {
  if (batch < 0 || time < 0 ||
      ids.size() != static_cast<std::size_t>(batch) * time || mask.size() != ids.size()) {
    throw MismatchError("sequence batch: ids/mask do not match [batch x time]");
  }
  for (int b = 0; b < batch; ++b) {
    auto m = row_mask(b);
    if (std::none_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; })) {
      throw MismatchError("sequence batch: row " + std::to_string(b) +
                          " has no real token");
    }
  }
}

template <typename T>
BiGru<T> BiGru<T>::create(ParamStore<T>& store, const std::string& prefix,
                          Eigen::Index input, Eigen::Index hidden) {
  if (input <= 0 || hidden <= 0) throw UsageError("BiGRU sizes must be positive");
  BiGru out;
  out.input = input;
  out.hidden = hidden;
  for (auto [dir, params] : {std::pair{"fw", &out.forward}, std::pair{"bw", &out.backward}}) {
    const std::string base = prefix + "." + dir;
    params->w = &store.add(base + ".W", 3 * hidden, input);
    params->u = &store.add(base + ".U", 3 * hidden, hidden);
    params->b = &store.add(base + ".b", 3 * hidden, 1);
  }
  return out;
}

template <typename T>
Dense<T> Dense<T>::create(ParamStore<T>& store, const std::string& prefix,
                          Eigen::Index in, Eigen::Index out, Activation activation) {
  if (in <= 0 || out <= 0) throw UsageError("dense layer sizes must be positive");
  Dense d;
  d.w = &store.add(prefix + ".W", out, in);
  d.b = &store.add(prefix + ".b", out, 1);
  d.activation = activation;
  return d;
}

template <typename T>
Attention<T> Attention<T>::create(ParamStore<T>& store, const std::string& prefix,
                                  Eigen::Index key_dim, Eigen::Index query_dim,
                                  Eigen::Index attn_dim) {
  Attention a;
  a.key_dim = key_dim;
  a.query_dim = query_dim;
  a.w = &store.add(prefix + ".W", attn_dim, key_dim + query_dim);
  a.v = &store.add(prefix + ".v", attn_dim, 1);
  return a;
}

template <typename T>
void initialize_by_role(ParamStore<T>& store, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    const std::string_view name = p.name;
    if (name.ends_with(".W") || name.ends_with(".v")) {
      init::glorot_uniform(p.value, rng);
    } else if (name.ends_with(".U")) {
      init::orthogonal_blocks(p.value, rng);
    } else if (name.ends_with(".b")) {
      p.value.setZero();
    }
  }
}

template <typename T>
EncodeResult bigru_encode(ad::Graph<T>& g, const BiGru<T>& layer, ad::Var x,
                          std::span<const std::uint8_t> mask) {
  const auto& xv = g.value(x);
  if (xv.rows() != layer.input) {
    throw MismatchError("bigru_encode: input has " + std::to_string(xv.rows()) +
                        " features, layer expects " + std::to_string(layer.input));
  }
  if (static_cast<Eigen::Index>(mask.size()) != xv.cols()) {
    throw MismatchError("bigru_encode: mask length does not match sequence length");
  }
  std::vector<Eigen::Index> real;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t] != 0) real.push_back(static_cast<Eigen::Index>(t));
  }
  if (real.empty()) throw MismatchError("bigru_encode: sequence is all padding");

  const Eigen::Index hidden = layer.hidden;
  const ad::Var zero = g.constant(Matrix<T>::Zero(hidden, 1));

  auto run = [&](const GruParams<T>& p, bool reverse, std::vector<ad::Var>& cols) {
    const ad::Var gx =
        ad::add_bias(g, ad::matmul(g, g.parameter(*p.w), x), g.parameter(*p.b));
    const ad::Var u = g.parameter(*p.u);
    ad::Var h = zero;
    auto step = [&](Eigen::Index t) {
      h = ad::gru_step(g, ad::column(g, gx, t), h, u);
      cols[static_cast<std::size_t>(t)] = h;
    };
    if (reverse) {
      std::for_each(real.rbegin(), real.rend(), step);
    } else {
      std::for_each(real.begin(), real.end(), step);
    }
    return h;
  };

  std::vector<ad::Var> fw_cols(mask.size(), zero);
  std::vector<ad::Var> bw_cols(mask.size(), zero);
  const ad::Var fw_last = run(layer.forward, false, fw_cols);
  const ad::Var bw_first = run(layer.backward, true, bw_cols);

  const ad::Var fw_states = ad::concat_cols<T>(g, fw_cols);
  const ad::Var bw_states = ad::concat_cols<T>(g, bw_cols);
  const ad::Var both[] = {fw_states, bw_states};
  const ad::Var ends[] = {fw_last, bw_first};
  return EncodeResult{ad::concat_rows<T>(g, both), ad::concat_rows<T>(g, ends)};
}

template <typename T>
AttentionResult additive_attention(ad::Graph<T>& g, const Attention<T>& att,
                                   ad::Var query, ad::Var keys,
                                   std::span<const std::uint8_t> mask) {
  const auto& kv = g.value(keys);
  const auto& qv = g.value(query);
  if (kv.rows() != att.key_dim || qv.rows() != att.query_dim || qv.cols() != 1) {
    throw MismatchError("additive_attention: query/key dimensions do not match");
  }
  std::vector<ad::Var> repeated(static_cast<std::size_t>(kv.cols()), query);
  const ad::Var parts[] = {keys, ad::concat_cols<T>(g, repeated)};
  const ad::Var joint = ad::concat_rows<T>(g, parts);
  const ad::Var hidden = ad::tanh(g, ad::matmul(g, g.parameter(*att.w), joint));
  const ad::Var scores = ad::matmul_tn(g, g.parameter(*att.v), hidden);
  const ad::Var weights = ad::softmax_rows(g, scores, mask);
  const ad::Var context = ad::matmul(g, keys, ad::transpose(g, weights));
  return AttentionResult{weights, context};
}

template <typename T>
ad::Var dense(ad::Graph<T>& g, const Dense<T>& layer, ad::Var x) {
  const ad::Var z =
      ad::add_bias(g, ad::matmul(g, g.parameter(*layer.w), x), g.parameter(*layer.b));
  switch (layer.activation) {
    case Activation::tanh:
      return ad::tanh(g, z);
    case Activation::relu:
      return ad::relu(g, z);
    case Activation::linear:
      break;
  }
  return z;
}

template <typename T>
ad::Var mlp(ad::Graph<T>& g, std::span<const Dense<T>> layers, ad::Var x) {
  for (const auto& layer : layers) x = dense(g, layer, x);
  return x;
}

template <typename T>
ad::Var hinge(ad::Graph<T>& g, ad::Var pos, ad::Var neg, T margin) {
  return ad::relu(g, ad::add_scalar(g, ad::sub(g, neg, pos), margin));
}

template <typename T>
ad::Var dropout(ad::Graph<T>& g, ad::Var x, double rate, std::mt19937_64* rng) {
  if (rate <= 0.0 || rng == nullptr) return x;
  if (rate >= 1.0) throw UsageError("dropout rate must be below 1");
  const auto& xv = g.value(x);
  Matrix<T> keep(xv.rows(), xv.cols());
  std::bernoulli_distribution coin(1.0 - rate);
  const T kept = static_cast<T>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = coin(*rng) ? kept : T(0);
  return ad::mask_multiply(g, x, std::move(keep));
}

template <typename T>
std::vector<Matrix<T>> embed(const SequenceBatch& batch, const Parameter<T>& table) {
  batch.validate();
  std::vector<Matrix<T>> out;
  out.reserve(static_cast<std::size_t>(batch.batch));
  for (int b = 0; b < batch.batch; ++b) {
    ad::Graph<T> g;
    out.push_back(g.value(g.lookup(table, batch.row_ids(b))));
  }
  return out;
}

template <typename T>
BatchEncoding<T> bigru_encode(const std::vector<Matrix<T>>& inputs,
                              const SequenceBatch& batch, const BiGru<T>& layer) {
  batch.validate();
  if (static_cast<int>(inputs.size()) != batch.batch) {
    throw MismatchError("bigru_encode: input count does not match batch size");
  }
  BatchEncoding<T> out;
  for (int b = 0; b < batch.batch; ++b) {
    ad::Graph<T> g;
    const auto enc = bigru_encode(g, layer, g.constant(inputs[b]), batch.row_mask(b));
    out.states.push_back(g.value(enc.states));
    out.final.push_back(g.value(enc.final));
  }
  return out;
}

double cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw MismatchError("cross_entropy: label out of range");
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericError("cross_entropy: non-finite logit");
    top = std::max(top, z);
  }
  double total = 0.0;
  for (double z : logits) total += std::exp(z - top);
  return std::log(total) + top - logits[static_cast<std::size_t>(label)];
}

double hinge_loss(double pos, double neg, double margin) {
  return std::max(0.0, margin - pos + neg);
}

#define STORYLOGIC_INSTANTIATE_LAYERS(T)                                          \
  template struct BiGru<T>;                                                       \
  template struct Dense<T>;                                                       \
  template struct Attention<T>;                                                   \
  template void initialize_by_role<T>(ParamStore<T>&, std::mt19937_64&);          \
  template EncodeResult bigru_encode<T>(ad::Graph<T>&, const BiGru<T>&, ad::Var,  \
                                        std::span<const std::uint8_t>);           \
  template AttentionResult additive_attention<T>(                                 \
      ad::Graph<T>&, const Attention<T>&, ad::Var, ad::Var,                       \
      std::span<const std::uint8_t>);                                             \
  template ad::Var dense<T>(ad::Graph<T>&, const Dense<T>&, ad::Var);             \
  template ad::Var mlp<T>(ad::Graph<T>&, std::span<const Dense<T>>, ad::Var);     \
  template ad::Var hinge<T>(ad::Graph<T>&, ad::Var, ad::Var, T);                  \
  template ad::Var dropout<T>(ad::Graph<T>&, ad::Var, double, std::mt19937_64*);  \
  template std::vector<Matrix<T>> embed<T>(const SequenceBatch&,                  \
                                           const Parameter<T>&);                  \
  template BatchEncoding<T> bigru_encode<T>(const std::vector<Matrix<T>>&,        \
                                            const SequenceBatch&, const BiGru<T>&);

STORYLOGIC_INSTANTIATE_LAYERS(float)
STORYLOGIC_INSTANTIATE_LAYERS(double)

#undef STORYLOGIC_INSTANTIATE_LAYERS

}  // namespace storylogic
