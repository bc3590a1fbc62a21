#pragma once

// Tape-based reverse-mode differentiation over column-major Eigen matrices.
//
// Sequences are laid out as [features x time]; vectors are single columns.
// A Graph lives for one forward/backward pass over one example.

#include "storylogic/params.hpp"

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace storylogic::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
class Graph {
 public:
  // With a null sink the graph records no gradient bookkeeping for
  // parameters (pure inference).
  explicit Graph(GradientSet<T>* sink = nullptr) : sink_(sink) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix<T> value);
  // One leaf per parameter per graph; repeated calls return the same Var.
  Var parameter(const Parameter<T>& p);
  // Columns are rows `ids[t]` of `table` ([rows x dim] -> [dim x n]).
  Var lookup(const Parameter<T>& table, std::span<const int> ids);

  // References are invalidated by the next recorded node.
  const Matrix<T>& value(Var v) const { return nodes_[v.id].value; }
  T scalar(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  // Gradient buffer, zero-allocated on first access.
  Matrix<T>& grad(Var v);
  const Matrix<T>& grad_if_any(Var v) const { return nodes_[v.id].grad; }

  std::size_t size() const { return nodes_.size(); }

  // Propagates d(out)/d(.) scaled by `seed` into every node and the sink.
  // `out` must be 1x1.
  void backward(Var out, T seed = T(1));

  using BackwardFn = std::function<void(Graph&, int self)>;
  // Low-level node constructor used by the op library.
  Var record(Matrix<T> value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Matrix<T> value, std::span<const Var> inputs, BackwardFn fn);

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    BackwardFn backward;
    bool needs_grad = false;
  };
  struct LookupLeaf {
    int node;
    const Parameter<T>* table;
    std::vector<int> ids;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_leaves_;
  std::vector<LookupLeaf> lookups_;
  GradientSet<T>* sink_;
};

// ---- op library --------------------------------------------------------

template <typename T> Var matmul(Graph<T>& g, Var a, Var b);
// a^T b
template <typename T> Var matmul_tn(Graph<T>& g, Var a, Var b);
template <typename T> Var transpose(Graph<T>& g, Var a);
template <typename T> Var add(Graph<T>& g, Var a, Var b);
template <typename T> Var sub(Graph<T>& g, Var a, Var b);
template <typename T> Var cmul(Graph<T>& g, Var a, Var b);
// Adds column vector `bias` to every column of `a`.
template <typename T> Var add_bias(Graph<T>& g, Var a, Var bias);
template <typename T> Var scale(Graph<T>& g, Var a, T factor);
template <typename T> Var add_scalar(Graph<T>& g, Var a, T c);
template <typename T> Var tanh(Graph<T>& g, Var a);
template <typename T> Var sigmoid(Graph<T>& g, Var a);
template <typename T> Var relu(Graph<T>& g, Var a);
// Inverted dropout with a precomputed keep mask (entries 0 or 1/(1-p)).
template <typename T> Var mask_multiply(Graph<T>& g, Var a, Matrix<T> mask);

template <typename T> Var concat_rows(Graph<T>& g, std::span<const Var> parts);
template <typename T> Var concat_cols(Graph<T>& g, std::span<const Var> parts);
template <typename T> Var column(Graph<T>& g, Var a, Eigen::Index c);
template <typename T> Var slice_rows(Graph<T>& g, Var a, Eigen::Index r0, Eigen::Index n);
// Stacks the columns of a [m x n] matrix into one [m*n x 1] column.
template <typename T> Var flatten_cols(Graph<T>& g, Var a);

// Softmax along each row over columns whose mask entry is nonzero; masked
// entries come out as exactly 0. Every mask must select at least one column.
template <typename T>
Var softmax_rows(Graph<T>& g, Var a, std::span<const std::uint8_t> col_mask);
// Mean / max over columns with nonzero mask -> [rows x 1].
template <typename T>
Var mean_cols(Graph<T>& g, Var a, std::span<const std::uint8_t> col_mask);
template <typename T>
Var max_cols(Graph<T>& g, Var a, std::span<const std::uint8_t> col_mask);

template <typename T> Var sum_all(Graph<T>& g, Var a);
// -log softmax(logits)[label] for a column of logits.
template <typename T> Var cross_entropy(Graph<T>& g, Var logits, int label);

// Fused GRU cell:
//   z = sigmoid(gx_z + U_z h), r = sigmoid(gx_r + U_r h),
//   n = tanh(gx_n + U_n (r * h)), h' = (1 - z) * n + z * h
// gx is the [3H x 1] input projection (W x + b), U is [3H x H].
template <typename T> Var gru_step(Graph<T>& g, Var gx, Var h, Var u);

}  // namespace storylogic::ad
