#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace storylogic {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// A named, shape-fixed array. `slot` is its position inside the owning store
// and indexes gradient and optimizer buffers.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  bool trainable = true;
  std::size_t slot = 0;
  // Row that never receives gradient (padding row of embedding tables).
  int frozen_row = -1;

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
};

// Ordered collection of parameters with unique names. Addresses of stored
// parameters are stable for the lifetime of the store.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter<T>& add(std::string name, Eigen::Index rows, Eigen::Index cols,
                    bool trainable = true);

  Parameter<T>* find(std::string_view name);
  const Parameter<T>* find(std::string_view name) const;
  Parameter<T>& at(std::string_view name);
  const Parameter<T>& at(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t slot) { return *params_[slot]; }
  const Parameter<T>& operator[](std::size_t slot) const { return *params_[slot]; }

  // Overwrites the value of an existing parameter; the shape must match.
  void assign(std::string_view name, const Matrix<T>& value);

  // Marks every parameter whose name starts with `prefix`.
  void set_trainable(std::string_view prefix, bool trainable);

  std::vector<Matrix<T>> snapshot() const;
  void restore(const std::vector<Matrix<T>>& values);

  std::size_t total_size() const;

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

// Per-slot gradient accumulators, allocated on first touch.
template <typename T>
class GradientSet {
 public:
  explicit GradientSet(const ParamStore<T>& store);

  Matrix<T>& at(const Parameter<T>& p);
  bool touched(std::size_t slot) const { return grads_[slot].size() > 0; }
  const Matrix<T>& slot(std::size_t s) const { return grads_[s]; }
  std::size_t size() const { return grads_.size(); }

  void clear();
  void scale(T factor);
  void add(const GradientSet& other);
  T squared_norm() const;

 private:
  const ParamStore<T>* store_;
  std::vector<Matrix<T>> grads_;
};

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global L2 norm threshold; non-positive disables clipping.
  double clip_norm = 5.0;
};

template <typename T>
class Adam {
 public:
  Adam(const ParamStore<T>& store, AdamSettings settings);

  // Applies one update to every trainable parameter. Returns true when the
  // gradient was rescaled by clipping.
  bool step(ParamStore<T>& store, GradientSet<T>& grads);

  std::int64_t steps() const { return t_; }
  std::size_t clip_events() const { return clips_; }

 private:
  AdamSettings settings_;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
  std::int64_t t_ = 0;
  std::size_t clips_ = 0;
};

namespace init {

// Uniform Glorot for a dense kernel of shape [fan_out x fan_in].
template <typename T>
void glorot_uniform(Matrix<T>& w, std::mt19937_64& rng);

// Orthogonal blocks of size [cols x cols] stacked vertically (GRU recurrent
// kernels are [3H x H]).
template <typename T>
void orthogonal_blocks(Matrix<T>& w, std::mt19937_64& rng);

template <typename T>
void uniform(Matrix<T>& w, double lo, double hi, std::mt19937_64& rng);

}  // namespace init

}  // namespace storylogic
