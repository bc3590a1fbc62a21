#include "storylogic/params.hpp"

#include "storylogic/error.hpp"

#include <Eigen/QR>

#include <cmath>

namespace storylogic {

template <typename T>
Parameter<T>& ParamStore<T>::add(std::string name, Eigen::Index rows,
                                 Eigen::Index cols, bool trainable) {
  if (find(name) != nullptr) {
    throw MismatchError("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter<T>>();
  p->name = std::move(name);
  p->value = Matrix<T>::Zero(rows, cols);
  p->trainable = trainable;
  p->slot = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParamStore<T>::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename T>
const Parameter<T>* ParamStore<T>::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename T>
Parameter<T>& ParamStore<T>::at(std::string_view name) {
  auto* p = find(name);
  if (p == nullptr) throw MismatchError("unknown parameter: " + std::string(name));
  return *p;
}

template <typename T>
const Parameter<T>& ParamStore<T>::at(std::string_view name) const {
  const auto* p = find(name);
  if (p == nullptr) throw MismatchError("unknown parameter: " + std::string(name));
  return *p;
}

template <typename T>
void ParamStore<T>::assign(std::string_view name, const Matrix<T>& value) {
  auto& p = at(name);
  if (p.value.rows() != value.rows() || p.value.cols() != value.cols()) {
    throw MismatchError("shape mismatch for parameter " + p.name + ": have " +
                        std::to_string(p.value.rows()) + "x" +
                        std::to_string(p.value.cols()) + ", got " +
                        std::to_string(value.rows()) + "x" +
                        std::to_string(value.cols()));
  }
  p.value = value;
}

template <typename T>
void ParamStore<T>::set_trainable(std::string_view prefix, bool trainable) {
  for (auto& p : params_) {
    if (std::string_view(p->name).starts_with(prefix)) p->trainable = trainable;
  }
}

template <typename T>
std::vector<Matrix<T>> ParamStore<T>::snapshot() const {
  std::vector<Matrix<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

template <typename T>
void ParamStore<T>::restore(const std::vector<Matrix<T>>& values) {
  if (values.size() != params_.size()) {
    throw MismatchError("snapshot does not match parameter store");
  }
  for (std::size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
}

template <typename T>
std::size_t ParamStore<T>::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename T>
GradientSet<T>::GradientSet(const ParamStore<T>& store)
    : store_(&store), grads_(store.size()) {}

template <typename T>
Matrix<T>& GradientSet<T>::at(const Parameter<T>& p) {
  auto& g = grads_.at(p.slot);
  if (g.size() == 0) g = Matrix<T>::Zero(p.value.rows(), p.value.cols());
  return g;
}

template <typename T>
void GradientSet<T>::clear() {
  for (auto& g : grads_) g.setZero();
}

template <typename T>
void GradientSet<T>::scale(T factor) {
  for (auto& g : grads_) {
    if (g.size() > 0) g *= factor;
  }
}

template <typename T>
void GradientSet<T>::add(const GradientSet& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (other.grads_[i].size() == 0) continue;
    if (grads_[i].size() == 0) {
      grads_[i] = other.grads_[i];
    } else {
      grads_[i] += other.grads_[i];
    }
  }
}

template <typename T>
T GradientSet<T>::squared_norm() const {
  T total = 0;
  for (const auto& g : grads_) {
    if (g.size() > 0) total += g.squaredNorm();
  }
  return total;
}

template <typename T>
Adam<T>::Adam(const ParamStore<T>& store, AdamSettings settings)
    : settings_(settings) {
  m_.reserve(store.size());
  v_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    m_.push_back(Matrix<T>::Zero(store[i].rows(), store[i].cols()));
    v_.push_back(Matrix<T>::Zero(store[i].rows(), store[i].cols()));
  }
}

template <typename T>
bool Adam<T>::step(ParamStore<T>& store, GradientSet<T>& grads) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (p.frozen_row >= 0 && grads.touched(i)) grads.at(p).row(p.frozen_row).setZero();
  }
  const T norm = std::sqrt(grads.squared_norm());
  if (!std::isfinite(static_cast<double>(norm))) {
    throw NumericError("non-finite gradient norm");
  }
  bool clipped = false;
  if (settings_.clip_norm > 0 && norm > static_cast<T>(settings_.clip_norm)) {
    grads.scale(static_cast<T>(settings_.clip_norm) / norm);
    clipped = true;
    ++clips_;
  }
  ++t_;
  const T b1 = static_cast<T>(settings_.beta1);
  const T b2 = static_cast<T>(settings_.beta2);
  const T lr = static_cast<T>(settings_.learning_rate);
  const T eps = static_cast<T>(settings_.epsilon);
  const T c1 = static_cast<T>(1.0 - std::pow(settings_.beta1, static_cast<double>(t_)));
  const T c2 = static_cast<T>(1.0 - std::pow(settings_.beta2, static_cast<double>(t_)));
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (!p.trainable || !grads.touched(i)) continue;
    const auto& g = grads.slot(i);
    m_[i] = b1 * m_[i] + (1 - b1) * g;
    v_[i] = b2 * v_[i] + (1 - b2) * g.cwiseProduct(g);
    p.value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
  }
  return clipped;
}

namespace init {

template <typename T>
void glorot_uniform(Matrix<T>& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  uniform(w, -limit, limit, rng);
}

template <typename T>
void orthogonal_blocks(Matrix<T>& w, std::mt19937_64& rng) {
  const Eigen::Index n = w.cols();
  if (n == 0 || w.rows() % n != 0) {
    throw MismatchError("orthogonal init needs rows to be a multiple of cols");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index block = 0; block < w.rows() / n; ++block) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    // Sign fix so the distribution is uniform over orthogonal matrices.
    const Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    w.block(block * n, 0, n, n) = q.cast<T>();
  }
}

template <typename T>
void uniform(Matrix<T>& w, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
}

template void glorot_uniform<float>(Matrix<float>&, std::mt19937_64&);
template void glorot_uniform<double>(Matrix<double>&, std::mt19937_64&);
template void orthogonal_blocks<float>(Matrix<float>&, std::mt19937_64&);
template void orthogonal_blocks<double>(Matrix<double>&, std::mt19937_64&);
template void uniform<float>(Matrix<float>&, double, double, std::mt19937_64&);
template void uniform<double>(Matrix<double>&, double, double, std::mt19937_64&);

}  // namespace init

template struct Parameter<float>;
template struct Parameter<double>;
template class ParamStore<float>;
template class ParamStore<double>;
template class GradientSet<float>;
template class GradientSet<double>;
template class Adam<float>;
template class Adam<double>;

}  // namespace storylogic
