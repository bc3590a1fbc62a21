#include "storylogic/autograd.hpp"

#include "storylogic/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace storylogic::ad {

namespace {

template <typename T>
void require_same_shape(const Matrix<T>& a, const Matrix<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw MismatchError(std::string(op) + ": shape mismatch " +
                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

void require_mask(std::span<const std::uint8_t> mask, Eigen::Index cols,
                  const char* op) {
  if (static_cast<Eigen::Index>(mask.size()) != cols) {
    throw MismatchError(std::string(op) + ": mask length does not match columns");
  }
  for (auto m : mask) {
    if (m != 0) return;
  }
  throw MismatchError(std::string(op) + ": mask selects no column");
}

}  // namespace

template <typename T>
Var Graph<T>::record(Matrix<T> value, std::span<const Var> inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  for (Var in : inputs) {
    if (nodes_[in.id].needs_grad) {
      node.needs_grad = true;
      break;
    }
  }
  if (node.needs_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Graph<T>::record(Matrix<T> value, std::initializer_list<Var> inputs,
                     BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

template <typename T>
Var Graph<T>::constant(Matrix<T> value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Graph<T>::parameter(const Parameter<T>& p) {
  if (auto it = param_leaves_.find(&p); it != param_leaves_.end()) {
    return Var{it->second};
  }
  Node node;
  node.value = p.value;
  node.needs_grad = sink_ != nullptr && p.trainable;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_leaves_.emplace(&p, id);
  return Var{id};
}

template <typename T>
Var Graph<T>::lookup(const Parameter<T>& table, std::span<const int> ids) {
  Matrix<T> out(table.value.cols(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const int id = ids[t];
    if (id < 0 || id >= table.value.rows()) {
      throw MismatchError("embedding id " + std::to_string(id) +
                          " out of range for table " + table.name + " with " +
                          std::to_string(table.value.rows()) + " rows");
    }
    out.col(static_cast<Eigen::Index>(t)) = table.value.row(id).transpose();
  }
  Node node;
  node.value = std::move(out);
  node.needs_grad = sink_ != nullptr && table.trainable;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  if (nodes_.back().needs_grad) {
    lookups_.push_back(LookupLeaf{id, &table, std::vector<int>(ids.begin(), ids.end())});
  }
  return Var{id};
}

template <typename T>
T Graph<T>::scalar(Var v) const {
  const auto& m = nodes_[v.id].value;
  if (m.size() != 1) throw MismatchError("scalar() on a non-scalar node");
  return m(0, 0);
}

template <typename T>
Matrix<T>& Graph<T>::grad(Var v) {
  auto& node = nodes_[v.id];
  if (node.grad.size() == 0) {
    node.grad = Matrix<T>::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

template <typename T>
void Graph<T>::backward(Var out, T seed) {
  if (nodes_[out.id].value.size() != 1) {
    throw MismatchError("backward() needs a scalar output");
  }
  if (!nodes_[out.id].needs_grad) return;
  grad(out)(0, 0) += seed;
  for (int i = out.id; i >= 0; --i) {
    auto& node = nodes_[i];
    if (!node.needs_grad || node.grad.size() == 0 || !node.backward) continue;
    node.backward(*this, i);
  }
  if (sink_ == nullptr) return;
  for (const auto& [param, id] : param_leaves_) {
    const auto& node = nodes_[id];
    if (node.needs_grad && node.grad.size() > 0) sink_->at(*param) += node.grad;
  }
  for (const auto& leaf : lookups_) {
    const auto& node = nodes_[leaf.node];
    if (node.grad.size() == 0) continue;
    auto& table_grad = sink_->at(*leaf.table);
    for (std::size_t t = 0; t < leaf.ids.size(); ++t) {
      table_grad.row(leaf.ids[t]) +=
          node.grad.col(static_cast<Eigen::Index>(t)).transpose();
    }
  }
}

// ---- ops ---------------------------------------------------------------

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (av.cols() != bv.rows()) {
    throw MismatchError("matmul: inner dimensions " + std::to_string(av.cols()) +
                        " and " + std::to_string(bv.rows()));
  }
  Matrix<T> out = av * bv;
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    if (gg.needs_grad(a)) gg.grad(a).noalias() += dy * gg.value(b).transpose();
    if (gg.needs_grad(b)) gg.grad(b).noalias() += gg.value(a).transpose() * dy;
  });
}

template <typename T>
Var matmul_tn(Graph<T>& g, Var a, Var b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (av.rows() != bv.rows()) {
    throw MismatchError("matmul_tn: row counts " + std::to_string(av.rows()) +
                        " and " + std::to_string(bv.rows()));
  }
  Matrix<T> out = av.transpose() * bv;
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    if (gg.needs_grad(a)) gg.grad(a).noalias() += gg.value(b) * dy.transpose();
    if (gg.needs_grad(b)) gg.grad(b).noalias() += gg.value(a) * dy;
  });
}

template <typename T>
Var transpose(Graph<T>& g, Var a) {
  Matrix<T> out = g.value(a).transpose();
  return g.record(std::move(out), {a}, [a](Graph<T>& gg, int self) {
    gg.grad(a) += gg.grad_if_any(Var{self}).transpose();
  });
}

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  require_same_shape(g.value(a), g.value(b), "add");
  Matrix<T> out = g.value(a) + g.value(b);
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    if (gg.needs_grad(a)) gg.grad(a) += dy;
    if (gg.needs_grad(b)) gg.grad(b) += dy;
  });
}

template <typename T>
Var sub(Graph<T>& g, Var a, Var b) {
  require_same_shape(g.value(a), g.value(b), "sub");
  Matrix<T> out = g.value(a) - g.value(b);
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    if (gg.needs_grad(a)) gg.grad(a) += dy;
    if (gg.needs_grad(b)) gg.grad(b) -= dy;
  });
}

template <typename T>
Var cmul(Graph<T>& g, Var a, Var b) {
  require_same_shape(g.value(a), g.value(b), "cmul");
  Matrix<T> out = g.value(a).cwiseProduct(g.value(b));
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    if (gg.needs_grad(a)) gg.grad(a) += dy.cwiseProduct(gg.value(b));
    if (gg.needs_grad(b)) gg.grad(b) += dy.cwiseProduct(gg.value(a));
  });
}

template <typename T>
Var add_bias(Graph<T>& g, Var a, Var bias) {
  const auto& av = g.value(a);
  const auto& bv = g.value(bias);
  if (bv.cols() != 1 || bv.rows() != av.rows()) {
    throw MismatchError("add_bias: bias must be a column of " +
                        std::to_string(av.rows()) + " rows");
  }
  Matrix<T> out = av.colwise() + bv.col(0);
  return g.record(std::move(out), {a, bias}, [a, bias](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    if (gg.needs_grad(a)) gg.grad(a) += dy;
    if (gg.needs_grad(bias)) gg.grad(bias) += dy.rowwise().sum();
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T factor) {
  Matrix<T> out = g.value(a) * factor;
  return g.record(std::move(out), {a}, [a, factor](Graph<T>& gg, int self) {
    gg.grad(a) += gg.grad_if_any(Var{self}) * factor;
  });
}

template <typename T>
Var add_scalar(Graph<T>& g, Var a, T c) {
  Matrix<T> out = g.value(a).array() + c;
  return g.record(std::move(out), {a}, [a](Graph<T>& gg, int self) {
    gg.grad(a) += gg.grad_if_any(Var{self});
  });
}

template <typename T>
Var tanh(Graph<T>& g, Var a) {
  Matrix<T> out = g.value(a).array().tanh();
  return g.record(std::move(out), {a}, [a](Graph<T>& gg, int self) {
    const auto& y = gg.value(Var{self});
    gg.grad(a).array() +=
        gg.grad_if_any(Var{self}).array() * (T(1) - y.array().square());
  });
}

template <typename T>
Var sigmoid(Graph<T>& g, Var a) {
  Matrix<T> out = (T(1) + (-g.value(a).array()).exp()).inverse();
  return g.record(std::move(out), {a}, [a](Graph<T>& gg, int self) {
    const auto& y = gg.value(Var{self});
    gg.grad(a).array() +=
        gg.grad_if_any(Var{self}).array() * y.array() * (T(1) - y.array());
  });
}

template <typename T>
Var relu(Graph<T>& g, Var a) {
  Matrix<T> out = g.value(a).cwiseMax(T(0));
  return g.record(std::move(out), {a}, [a](Graph<T>& gg, int self) {
    const auto& x = gg.value(a);
    gg.grad(a).array() +=
        (x.array() > T(0)).select(gg.grad_if_any(Var{self}).array(), T(0));
  });
}

template <typename T>
Var mask_multiply(Graph<T>& g, Var a, Matrix<T> mask) {
  require_same_shape(g.value(a), mask, "mask_multiply");
  Matrix<T> out = g.value(a).cwiseProduct(mask);
  return g.record(std::move(out), {a},
                  [a, m = std::move(mask)](Graph<T>& gg, int self) {
                    gg.grad(a) += gg.grad_if_any(Var{self}).cwiseProduct(m);
                  });
}

template <typename T>
Var concat_rows(Graph<T>& g, std::span<const Var> parts) {
  if (parts.empty()) throw MismatchError("concat_rows: no inputs");
  const Eigen::Index cols = g.value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    if (g.value(p).cols() != cols) throw MismatchError("concat_rows: column mismatch");
    rows += g.value(p).rows();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, g.value(p).rows()) = g.value(p);
    r += g.value(p).rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    Eigen::Index r0 = 0;
    for (Var p : inputs) {
      const Eigen::Index n = gg.value(p).rows();
      if (gg.needs_grad(p)) gg.grad(p) += dy.middleRows(r0, n);
      r0 += n;
    }
  });
}

template <typename T>
Var concat_cols(Graph<T>& g, std::span<const Var> parts) {
  if (parts.empty()) throw MismatchError("concat_cols: no inputs");
  const Eigen::Index rows = g.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (g.value(p).rows() != rows) throw MismatchError("concat_cols: row mismatch");
    cols += g.value(p).cols();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, g.value(p).cols()) = g.value(p);
    c += g.value(p).cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    Eigen::Index c0 = 0;
    for (Var p : inputs) {
      const Eigen::Index n = gg.value(p).cols();
      if (gg.needs_grad(p)) gg.grad(p) += dy.middleCols(c0, n);
      c0 += n;
    }
  });
}

template <typename T>
Var column(Graph<T>& g, Var a, Eigen::Index c) {
  if (c < 0 || c >= g.value(a).cols()) throw MismatchError("column: index out of range");
  Matrix<T> out = g.value(a).col(c);
  return g.record(std::move(out), {a}, [a, c](Graph<T>& gg, int self) {
    gg.grad(a).col(c) += gg.grad_if_any(Var{self}).col(0);
  });
}

template <typename T>
Var slice_rows(Graph<T>& g, Var a, Eigen::Index r0, Eigen::Index n) {
  if (r0 < 0 || n < 0 || r0 + n > g.value(a).rows()) {
    throw MismatchError("slice_rows: range out of bounds");
  }
  Matrix<T> out = g.value(a).middleRows(r0, n);
  return g.record(std::move(out), {a}, [a, r0, n](Graph<T>& gg, int self) {
    gg.grad(a).middleRows(r0, n) += gg.grad_if_any(Var{self});
  });
}

template <typename T>
Var flatten_cols(Graph<T>& g, Var a) {
  const auto& av = g.value(a);
  Matrix<T> out = Eigen::Map<const Matrix<T>>(av.data(), av.size(), 1);
  const Eigen::Index rows = av.rows();
  const Eigen::Index cols = av.cols();
  return g.record(std::move(out), {a}, [a, rows, cols](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    gg.grad(a) += Eigen::Map<const Matrix<T>>(dy.data(), rows, cols);
  });
}

template <typename T>
Var softmax_rows(Graph<T>& g, Var a, std::span<const std::uint8_t> col_mask) {
  const auto& x = g.value(a);
  require_mask(col_mask, x.cols(), "softmax_rows");
  Matrix<T> y = Matrix<T>::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    T best = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (col_mask[j] != 0) best = std::max(best, x(i, j));
    }
    T total = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (col_mask[j] == 0) continue;
      y(i, j) = std::exp(x(i, j) - best);
      total += y(i, j);
    }
    y.row(i) /= total;
  }
  return g.record(std::move(y), {a}, [a](Graph<T>& gg, int self) {
    const auto& yv = gg.value(Var{self});
    const auto& dy = gg.grad_if_any(Var{self});
    auto& dx = gg.grad(a);
    for (Eigen::Index i = 0; i < yv.rows(); ++i) {
      const T dot = dy.row(i).dot(yv.row(i));
      dx.row(i).array() += yv.row(i).array() * (dy.row(i).array() - dot);
    }
  });
}

template <typename T>
Var mean_cols(Graph<T>& g, Var a, std::span<const std::uint8_t> col_mask) {
  const auto& x = g.value(a);
  require_mask(col_mask, x.cols(), "mean_cols");
  Matrix<T> out = Matrix<T>::Zero(x.rows(), 1);
  T count = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (col_mask[j] == 0) continue;
    out.col(0) += x.col(j);
    count += 1;
  }
  out /= count;
  std::vector<std::uint8_t> mask(col_mask.begin(), col_mask.end());
  return g.record(std::move(out), {a},
                  [a, mask = std::move(mask), count](Graph<T>& gg, int self) {
                    const auto& dy = gg.grad_if_any(Var{self});
                    auto& dx = gg.grad(a);
                    for (std::size_t j = 0; j < mask.size(); ++j) {
                      if (mask[j] != 0) dx.col(static_cast<Eigen::Index>(j)) += dy.col(0) / count;
                    }
                  });
}

template <typename T>
Var max_cols(Graph<T>& g, Var a, std::span<const std::uint8_t> col_mask) {
  const auto& x = g.value(a);
  require_mask(col_mask, x.cols(), "max_cols");
  Matrix<T> out(x.rows(), 1);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.rows()), -1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    T best = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (col_mask[j] != 0 && (arg[i] < 0 || x(i, j) > best)) {
        best = x(i, j);
        arg[i] = j;
      }
    }
    out(i, 0) = best;
  }
  return g.record(std::move(out), {a}, [a, arg = std::move(arg)](Graph<T>& gg, int self) {
    const auto& dy = gg.grad_if_any(Var{self});
    auto& dx = gg.grad(a);
    for (std::size_t i = 0; i < arg.size(); ++i) {
      dx(static_cast<Eigen::Index>(i), arg[i]) += dy(static_cast<Eigen::Index>(i), 0);
    }
  });
}

template <typename T>
Var sum_all(Graph<T>& g, Var a) {
  Matrix<T> out(1, 1);
  out(0, 0) = g.value(a).sum();
  return g.record(std::move(out), {a}, [a](Graph<T>& gg, int self) {
    gg.grad(a).array() += gg.grad_if_any(Var{self})(0, 0);
  });
}

template <typename T>
Var cross_entropy(Graph<T>& g, Var logits, int label) {
  const auto& z = g.value(logits);
  if (z.cols() != 1) throw MismatchError("cross_entropy: logits must be a column");
  if (label < 0 || label >= z.rows()) {
    throw MismatchError("cross_entropy: label " + std::to_string(label) +
                        " outside [0, " + std::to_string(z.rows()) + ")");
  }
  if (!z.allFinite()) throw NumericError("cross_entropy: non-finite logits");
  const T top = z.maxCoeff();
  Matrix<T> p = (z.array() - top).exp();
  const T total = p.sum();
  p /= total;
  Matrix<T> out(1, 1);
  out(0, 0) = std::log(total) + top - z(label, 0);
  return g.record(std::move(out), {logits},
                  [logits, label, p = std::move(p)](Graph<T>& gg, int self) {
                    const T dy = gg.grad_if_any(Var{self})(0, 0);
                    auto& dz = gg.grad(logits);
                    dz += dy * p;
                    dz(label, 0) -= dy;
                  });
}

template <typename T>
Var gru_step(Graph<T>& g, Var gx, Var h, Var u) {
  const auto& gxv = g.value(gx);
  const auto& hv = g.value(h);
  const auto& uv = g.value(u);
  const Eigen::Index hidden = hv.rows();
  if (gxv.rows() != 3 * hidden || gxv.cols() != 1 || hv.cols() != 1 ||
      uv.rows() != 3 * hidden || uv.cols() != hidden) {
    throw MismatchError("gru_step: inconsistent shapes");
  }
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  const Vec uh_zr = uv.topRows(2 * hidden) * hv;
  const Vec z = (T(1) + (-(gxv.col(0).head(hidden) + uh_zr.head(hidden))).array().exp())
                    .inverse()
                    .matrix();
  const Vec r = (T(1) + (-(gxv.col(0).segment(hidden, hidden) + uh_zr.tail(hidden)))
                            .array()
                            .exp())
                    .inverse()
                    .matrix();
  const Vec rh = r.cwiseProduct(hv.col(0));
  const Vec n = (gxv.col(0).tail(hidden) + uv.bottomRows(hidden) * rh).array().tanh().matrix();
  Matrix<T> out = ((T(1) - z.array()) * n.array() + z.array() * hv.col(0).array()).matrix();
  return g.record(
      std::move(out), {gx, h, u},
      [gx, h, u, hidden, z, r, rh, n](Graph<T>& gg, int self) {
        const Vec dout = gg.grad_if_any(Var{self}).col(0);
        const auto& hprev = gg.value(h).col(0);
        const auto& uw = gg.value(u);
        const Vec dn = dout.cwiseProduct((T(1) - z.array()).matrix());
        const Vec dz = dout.cwiseProduct(hprev - n);
        const Vec da_n = dn.cwiseProduct((T(1) - n.array().square()).matrix());
        const Vec drh = uw.bottomRows(hidden).transpose() * da_n;
        const Vec dr = drh.cwiseProduct(hprev);
        const Vec da_z = dz.cwiseProduct((z.array() * (T(1) - z.array())).matrix());
        const Vec da_r = dr.cwiseProduct((r.array() * (T(1) - r.array())).matrix());
        if (gg.needs_grad(gx)) {
          auto& dgx = gg.grad(gx);
          dgx.col(0).head(hidden) += da_z;
          dgx.col(0).segment(hidden, hidden) += da_r;
          dgx.col(0).tail(hidden) += da_n;
        }
        if (gg.needs_grad(u)) {
          auto& du = gg.grad(u);
          du.topRows(hidden).noalias() += da_z * hprev.transpose();
          du.middleRows(hidden, hidden).noalias() += da_r * hprev.transpose();
          du.bottomRows(hidden).noalias() += da_n * rh.transpose();
        }
        if (gg.needs_grad(h)) {
          Vec dh = dout.cwiseProduct(z) + drh.cwiseProduct(r);
          dh.noalias() += uw.topRows(hidden).transpose() * da_z;
          dh.noalias() += uw.middleRows(hidden, hidden).transpose() * da_r;
          gg.grad(h).col(0) += dh;
        }
      });
}

#define STORYLOGIC_INSTANTIATE_OPS(T)                                            \
  template class Graph<T>;                                                       \
  template Var matmul<T>(Graph<T>&, Var, Var);                                   \
  template Var matmul_tn<T>(Graph<T>&, Var, Var);                                \
  template Var transpose<T>(Graph<T>&, Var);                                     \
  template Var add<T>(Graph<T>&, Var, Var);                                      \
  template Var sub<T>(Graph<T>&, Var, Var);                                      \
  template Var cmul<T>(Graph<T>&, Var, Var);                                     \
  template Var add_bias<T>(Graph<T>&, Var, Var);                                 \
  template Var scale<T>(Graph<T>&, Var, T);                                      \
  template Var add_scalar<T>(Graph<T>&, Var, T);                                 \
  template Var tanh<T>(Graph<T>&, Var);                                          \
  template Var sigmoid<T>(Graph<T>&, Var);                                       \
  template Var relu<T>(Graph<T>&, Var);                                          \
  template Var mask_multiply<T>(Graph<T>&, Var, Matrix<T>);                      \
  template Var concat_rows<T>(Graph<T>&, std::span<const Var>);                  \
  template Var concat_cols<T>(Graph<T>&, std::span<const Var>);                  \
  template Var column<T>(Graph<T>&, Var, Eigen::Index);                          \
  template Var slice_rows<T>(Graph<T>&, Var, Eigen::Index, Eigen::Index);        \
  template Var flatten_cols<T>(Graph<T>&, Var);                                  \
  template Var softmax_rows<T>(Graph<T>&, Var, std::span<const std::uint8_t>);   \
  template Var mean_cols<T>(Graph<T>&, Var, std::span<const std::uint8_t>);      \
  template Var max_cols<T>(Graph<T>&, Var, std::span<const std::uint8_t>);       \
  template Var sum_all<T>(Graph<T>&, Var);                                       \
  template Var cross_entropy<T>(Graph<T>&, Var, int);                            \
  template Var gru_step<T>(Graph<T>&, Var, Var, Var);

STORYLOGIC_INSTANTIATE_OPS(float)
STORYLOGIC_INSTANTIATE_OPS(double)

#undef STORYLOGIC_INSTANTIATE_OPS

}  // namespace storylogic::ad
