// Copyright 2026 The opsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records every operation applied to Vars created from it. Calling
// Tape::backward(loss) walks the record in reverse and accumulates gradients
// into the Parameters that were read through Tape::parameter / Tape::gather.
// Vectors are column matrices throughout.

#ifndef OPSUM_AUTOGRAD_HPP_
#define OPSUM_AUTOGRAD_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "opsum/base.hpp"

namespace opsum::ag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named trainable matrix. `grad` is a side buffer filled by
// Tape::backward; it is mutable so that graph builders can take models by
// const reference (a grad-disabled tape never writes it).
struct Parameter {
  std::string name;
  Matrix value;
  mutable Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {}

  void zero_grad() const { grad.setZero(value.rows(), value.cols()); }

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) const {
    if (grad.size() == 0) grad.setZero(value.rows(), value.cols());
    grad += g;
  }
};

// Uniform in [-scale, scale], drawn row-major so that the layout of the draw
// does not depend on Eigen's storage order.
inline Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  double scalar() const { return value()(0, 0); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives (tape, dL/d(output), output value).
  using Backward = std::function<void(Tape&, const Matrix&, const Matrix&)>;

  // With grad disabled, operations still compute values but no backward
  // closures are kept (inference mode).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  Var scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  // Leaf reading `p` in place. Recorded once per tape; later calls return the
  // same Var. `p` must outlive the tape and stay unmodified until backward.
  Var parameter(const Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
      return Var(this, it->second);
    Node n;
    n.external = &p.value;
    n.requires_grad = grad_enabled_;
    if (grad_enabled_) {
      const Parameter* target = &p;
      n.backward = [target](Tape&, const Matrix& g, const Matrix&) { target->accumulate(g); };
    }
    Var v = push(std::move(n));
    param_nodes_.emplace(&p, v.id_);
    return v;
  }

  // Read-only view of a parameter; no gradient flows into it.
  Var frozen(const Parameter& p) {
    Node n;
    n.external = &p.value;
    return push(std::move(n));
  }

  // Columns are rows `ids` of `table` (so the result is cols(table) x |ids|).
  // The backward pass scatters into the touched rows only.
  Var gather(const Parameter& table, std::span<const int> ids) {
    Var v = gather_value(table, ids);
    if (grad_enabled_) {
      Node& n = nodes_[static_cast<std::size_t>(v.id_)];
      n.requires_grad = true;
      const Parameter* target = &table;
      std::vector<int> rows(ids.begin(), ids.end());
      n.backward = [target, rows = std::move(rows)](Tape&, const Matrix& g, const Matrix&) {
        if (target->grad.size() == 0) target->zero_grad();
        for (std::size_t k = 0; k < rows.size(); ++k)
          target->grad.row(rows[k]) += g.col(static_cast<Eigen::Index>(k)).transpose();
      };
    }
    return v;
  }

  Var gather_frozen(const Parameter& table, std::span<const int> ids) {
    return gather_value(table, ids);
  }

  // Records an operation. `backward` receives dL/d(output) and must route it
  // into the inputs via accumulate(). It is dropped when no input needs grad.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return record_span(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                       std::move(backward));
  }

  Var record_span(Matrix value, std::span<const Var> inputs, Backward backward) {
    Node n;
    n.owned = std::move(value);
    if (grad_enabled_) {
      for (const Var& in : inputs) {
        if (nodes_[static_cast<std::size_t>(in.id_)].requires_grad) {
          n.requires_grad = true;
          break;
        }
      }
      if (n.requires_grad) n.backward = std::move(backward);
    }
    return push(std::move(n));
  }

  const Matrix& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.owned;
  }

  bool requires_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Gradient of the last backward() with respect to `v` (empty if unreached).
  const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id_)].grad; }

  void backward(Var root) {
    if (root.tape_ != this) throw std::logic_error("backward: Var from another tape");
    if (root.rows() != 1 || root.cols() != 1)
      throw std::logic_error("backward: root must be a scalar");
    if (!grad_enabled_) throw std::logic_error("backward: tape has grad disabled");
    accumulate(root.id_, Matrix::Ones(1, 1));
    for (int id = root.id_; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n.grad, n.external ? *n.external : n.owned);
    }
  }

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var gather_value(const Parameter& table, std::span<const int> ids) {
    Matrix out(table.value.cols(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] < 0 || ids[k] >= table.value.rows())
        throw std::out_of_range("gather: row " + std::to_string(ids[k]) + " out of range for " +
                                table.name);
      out.col(static_cast<Eigen::Index>(k)) = table.value.row(ids[k]).transpose();
    }
    return constant(std::move(out));
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool grad_enabled_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// ---------------------------------------------------------------------------
// Operations.

namespace detail {
inline void check_same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw std::logic_error("operands from different tapes");
}
inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}
}  // namespace detail

inline Var matmul(Var a, Var b) {
  detail::check_same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& t, const Matrix& g, const Matrix&) {
                    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
                    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
                  });
}

inline Var add(Var a, Var b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& t, const Matrix& g, const Matrix&) {
                    t.accumulate(ia, g);
                    t.accumulate(ib, g);
                  });
}

inline Var sub(Var a, Var b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& t, const Matrix& g, const Matrix&) {
                    t.accumulate(ia, g);
                    t.accumulate(ib, -g);
                  });
}

// m (r x c) plus column vector b (r x 1) added to every column.
inline Var add_bias(Var m, Var b) {
  detail::check_same_tape(m, b);
  if (b.cols() != 1 || b.rows() != m.rows()) throw std::invalid_argument("add_bias: shape");
  Tape& t = *m.tape();
  Matrix v = m.value().colwise() + b.value().col(0);
  return t.record(std::move(v), {m, b}, [im = m.id(), ib = b.id()](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(im, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g.rowwise().sum());
  });
}

inline Var cmul(Var a, Var b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "cmul");
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(b.value()), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& t, const Matrix& g, const Matrix&) {
                    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                  });
}

inline Var scale(Var a, double c) {
  Tape& t = *a.tape();
  return t.record(a.value() * c, {a},
                  [ia = a.id(), c](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(ia, g * c); });
}

// s is 1 x 1; returns s * v.
inline Var scale_by(Var s, Var v) {
  detail::check_same_tape(s, v);
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("scale_by: s must be 1x1");
  Tape& t = *s.tape();
  return t.record(v.value() * s.scalar(), {s, v},
                  [is = s.id(), iv = v.id()](Tape& t, const Matrix& g, const Matrix&) {
                    if (t.requires_grad(is))
                      t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(iv)).sum()));
                    if (t.requires_grad(iv)) t.accumulate(iv, g * t.value(is)(0, 0));
                  });
}

inline Var one_minus(Var a) {
  Tape& t = *a.tape();
  Matrix v = (1.0 - a.value().array()).matrix();
  return t.record(std::move(v), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(ia, -g); });
}

inline Var tanh(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().array().tanh().matrix(), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix& y) {
                    t.accumulate(ia, (g.array() * (1.0 - y.array().square())).matrix());
                  });
}

inline Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return t.record(std::move(y), {a}, [ia = a.id()](Tape& t, const Matrix& g, const Matrix& y) {
    t.accumulate(ia, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

inline Var relu(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(0.0), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix&) {
                    const Matrix& x = t.value(ia);
                    t.accumulate(ia, (x.array() > 0.0).select(g, Matrix::Zero(g.rows(), g.cols())));
                  });
}

inline Var log(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().array().log().matrix(), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix&) {
                    t.accumulate(ia, (g.array() / t.value(ia).array()).matrix());
                  });
}

namespace detail {
inline Matrix softmax_col(const Matrix& x) {
  Matrix y = (x.array() - x.maxCoeff()).exp().matrix();
  return y / y.sum();
}
}  // namespace detail

// Softmax of a column vector.
inline Var softmax(Var a) {
  if (a.cols() != 1) throw std::invalid_argument("softmax: expects a column vector");
  Tape& t = *a.tape();
  return t.record(detail::softmax_col(a.value()), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix& y) {
                    double gy = g.cwiseProduct(y).sum();
                    t.accumulate(ia, (y.array() * (g.array() - gy)).matrix());
                  });
}

inline Var log_softmax(Var a) {
  if (a.cols() != 1) throw std::invalid_argument("log_softmax: expects a column vector");
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  double m = x.maxCoeff();
  double lse = m + std::log((x.array() - m).exp().sum());
  return t.record((x.array() - lse).matrix(), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix& y) {
                    t.accumulate(ia, (g.array() - y.array().exp() * g.sum()).matrix());
                  });
}

inline Var sum(Var a) {
  Tape& t = *a.tape();
  return t.record(Matrix::Constant(1, 1, a.value().sum()), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix&) {
                    const Matrix& x = t.value(ia);
                    t.accumulate(ia, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                  });
}

inline Var dot(Var a, Var b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a, b, "dot");
  Tape& t = *a.tape();
  return t.record(Matrix::Constant(1, 1, a.value().cwiseProduct(b.value()).sum()), {a, b},
                  [ia = a.id(), ib = b.id()](Tape& t, const Matrix& g, const Matrix&) {
                    if (t.requires_grad(ia)) t.accumulate(ia, t.value(ib) * g(0, 0));
                    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia) * g(0, 0));
                  });
}

// Element `i` of a column vector, as a 1 x 1.
inline Var pick(Var a, Eigen::Index i) {
  Tape& t = *a.tape();
  if (i < 0 || i >= a.rows()) throw std::out_of_range("pick: index out of range");
  return t.record(Matrix::Constant(1, 1, a.value()(i, 0)), {a},
                  [ia = a.id(), i](Tape& t, const Matrix& g, const Matrix&) {
                    Matrix d = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
                    d(i, 0) = g(0, 0);
                    t.accumulate(ia, d);
                  });
}

// Rows [start, start + len).
inline Var slice(Var a, Eigen::Index start, Eigen::Index len) {
  Tape& t = *a.tape();
  if (start < 0 || len < 0 || start + len > a.rows())
    throw std::out_of_range("slice: range out of bounds");
  return t.record(a.value().middleRows(start, len), {a},
                  [ia = a.id(), start, len](Tape& t, const Matrix& g, const Matrix&) {
                    Matrix d = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
                    d.middleRows(start, len) = g;
                    t.accumulate(ia, d);
                  });
}

// Vertical concatenation.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Tape& t = *parts.front().tape();
  Eigen::Index rows = 0;
  Eigen::Index cols = parts.front().cols();
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::logic_error("operands from different tapes");
    if (p.cols() != cols) throw std::invalid_argument("concat: column mismatch");
    rows += p.rows();
  }
  Matrix v(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    layout.emplace_back(p.id(), off);
    off += p.rows();
  }
  return t.record_span(std::move(v), parts,
                       [layout = std::move(layout)](Tape& t, const Matrix& g, const Matrix&) {
                         for (const auto& [id, o] : layout) {
                           if (t.requires_grad(id))
                             t.accumulate(id, g.middleRows(o, t.value(id).rows()));
                         }
                       });
}

inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var transpose(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().transpose(), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix&) {
                    t.accumulate(ia, g.transpose());
                  });
}

// Sum of equally shaped Vars.
inline Var add_n(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("add_n: no inputs");
  Tape& t = *parts.front().tape();
  Matrix v = parts.front().value();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].tape() != &t) throw std::logic_error("operands from different tapes");
    if (parts[i].rows() != v.rows() || parts[i].cols() != v.cols())
      throw std::invalid_argument("add_n: shape mismatch");
    v += parts[i].value();
  }
  std::vector<int> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return t.record_span(std::move(v), parts,
                       [ids = std::move(ids)](Tape& t, const Matrix& g, const Matrix&) {
                         for (int id : ids) t.accumulate(id, g);
                       });
}

// Mean over columns: (r x c) -> (r x 1).
inline Var mean_cols(Var a) {
  Tape& t = *a.tape();
  Eigen::Index c = a.cols();
  if (c == 0) throw std::invalid_argument("mean_cols: no columns");
  return t.record(a.value().rowwise().mean(), {a},
                  [ia = a.id(), c](Tape& t, const Matrix& g, const Matrix&) {
                    t.accumulate(ia, g.replicate(1, c) / static_cast<double>(c));
                  });
}

// Identity on the forward pass; multiplies the incoming gradient by -factor.
inline Var grad_reverse(Var a, double factor = 1.0) {
  Tape& t = *a.tape();
  return t.record(a.value(), {a}, [ia = a.id(), factor](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ia, -factor * g);
  });
}

// out[ids[k]] += a[k]; result has `size` rows.
inline Var scatter(Var a, std::span<const int> ids, Eigen::Index size) {
  if (a.cols() != 1 || a.rows() != static_cast<Eigen::Index>(ids.size()))
    throw std::invalid_argument("scatter: expects one value per id");
  Tape& t = *a.tape();
  Matrix v = Matrix::Zero(size, 1);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= size) throw std::out_of_range("scatter: id out of range");
    v(ids[k], 0) += a.value()(static_cast<Eigen::Index>(k), 0);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return t.record(std::move(v), {a},
                  [ia = a.id(), idv = std::move(idv)](Tape& t, const Matrix& g, const Matrix&) {
                    Matrix d(static_cast<Eigen::Index>(idv.size()), 1);
                    for (std::size_t k = 0; k < idv.size(); ++k)
                      d(static_cast<Eigen::Index>(k), 0) = g(idv[k], 0);
                    t.accumulate(ia, d);
                  });
}

// Each row scaled to unit L2 norm. Zero rows are rejected.
inline Var row_normalize(Var a) {
  Tape& t = *a.tape();
  Vector norms = a.value().rowwise().norm();
  for (Eigen::Index r = 0; r < norms.size(); ++r) {
    if (!(norms(r) > 0.0)) throw ValidationError("row_normalize: row " + std::to_string(r) + " is zero");
  }
  Matrix y = norms.cwiseInverse().asDiagonal() * a.value();
  return t.record(std::move(y), {a},
                  [ia = a.id(), norms](Tape& t, const Matrix& g, const Matrix& y) {
                    Vector proj = y.cwiseProduct(g).rowwise().sum();
                    Matrix d = g - proj.asDiagonal() * y;
                    t.accumulate(ia, norms.cwiseInverse().asDiagonal() * d);
                  });
}

inline Var frobenius(Var a) {
  Tape& t = *a.tape();
  double n = a.value().norm();
  return t.record(Matrix::Constant(1, 1, n), {a},
                  [ia = a.id(), n](Tape& t, const Matrix& g, const Matrix&) {
                    if (n > 0.0) t.accumulate(ia, t.value(ia) * (g(0, 0) / n));
                  });
}

inline Var add_identity(Var a, double c) {
  Tape& t = *a.tape();
  if (a.rows() != a.cols()) throw std::invalid_argument("add_identity: matrix must be square");
  Matrix v = a.value();
  v.diagonal().array() += c;
  return t.record(std::move(v), {a},
                  [ia = a.id()](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(ia, g); });
}

// Inverted dropout with a fixed mask drawn from `rng`. rate == 0 is identity.
inline Var dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  Tape& t = *a.tape();
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      mask(r, c) = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return t.record(a.value().cwiseProduct(mask), {a},
                  [ia = a.id(), mask](Tape& t, const Matrix& g, const Matrix&) {
                    t.accumulate(ia, g.cwiseProduct(mask));
                  });
}

// One LSTM step. W is 4H x (n + H) with gate blocks ordered (input, forget,
// cell, output); b is 4H x 1. Returns [h'; c'] as a 2H x 1 Var.
inline Var lstm_cell(Var x, Var h, Var c, Var W, Var b) {
  Tape& t = *x.tape();
  const Eigen::Index H = h.rows();
  const Eigen::Index n = x.rows();
  if (W.rows() != 4 * H || W.cols() != n + H || b.rows() != 4 * H || c.rows() != H)
    throw std::invalid_argument("lstm_cell: shape mismatch");
  Vector xh(n + H);
  xh << x.value().col(0), h.value().col(0);
  Vector z = W.value() * xh + b.value().col(0);
  auto sig = [](const auto& v) { return (1.0 / (1.0 + (-v.array()).exp())).matrix().eval(); };
  Vector ig = sig(z.segment(0, H));
  Vector fg = sig(z.segment(H, H));
  Vector gg = z.segment(2 * H, H).array().tanh().matrix();
  Vector og = sig(z.segment(3 * H, H));
  Vector c_new = fg.cwiseProduct(c.value().col(0)) + ig.cwiseProduct(gg);
  Vector tc = c_new.array().tanh().matrix();
  Vector h_new = og.cwiseProduct(tc);
  Matrix out(2 * H, 1);
  out << h_new, c_new;
  return t.record(
      std::move(out), {x, h, c, W, b},
      [ix = x.id(), ih = h.id(), ic = c.id(), iW = W.id(), ib = b.id(), H, n, xh, ig, fg, gg, og,
       tc](Tape& t, const Matrix& g, const Matrix&) {
        Vector gh = g.col(0).segment(0, H);
        Vector gc = g.col(0).segment(H, H);
        Vector d_o = gh.cwiseProduct(tc);
        Vector dc = gc + gh.cwiseProduct(og).cwiseProduct((1.0 - tc.array().square()).matrix());
        Vector di = dc.cwiseProduct(gg);
        Vector dg = dc.cwiseProduct(ig);
        Vector df = dc.cwiseProduct(t.value(ic).col(0));
        Vector dz(4 * H);
        dz.segment(0, H) = (di.array() * ig.array() * (1.0 - ig.array())).matrix();
        dz.segment(H, H) = (df.array() * fg.array() * (1.0 - fg.array())).matrix();
        dz.segment(2 * H, H) = (dg.array() * (1.0 - gg.array().square())).matrix();
        dz.segment(3 * H, H) = (d_o.array() * og.array() * (1.0 - og.array())).matrix();
        if (t.requires_grad(iW)) t.accumulate(iW, dz * xh.transpose());
        if (t.requires_grad(ib)) t.accumulate(ib, dz);
        if (t.requires_grad(ix) || t.requires_grad(ih)) {
          Vector dxh = t.value(iW).transpose() * dz;
          t.accumulate(ix, dxh.segment(0, n));
          t.accumulate(ih, dxh.segment(n, H));
        }
        t.accumulate(ic, dc.cwiseProduct(fg));
      });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

// ---------------------------------------------------------------------------
// Parameter bookkeeping shared by the optimizers and checkpoints.

using ParameterRefs = std::vector<Parameter*>;

inline double global_grad_norm(const ParameterRefs& params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (p->grad.size() != 0) sq += p->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

inline bool all_finite(const ParameterRefs& params) {
  for (const Parameter* p : params) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

}  // namespace opsum::ag

#endif  // OPSUM_AUTOGRAD_HPP_
