#pragma once

// Tape-based reverse-mode differentiation over row-major dense matrices.
//
// Every value is a rank <= 2 matrix of doubles (vectors are 1 x n rows).
// Operations append a node holding the forward value and a closure that
// pushes the node's adjoint into its inputs. Tape::backward walks the nodes
// once in reverse insertion order, which is a valid reverse topological order
// because inputs are always recorded before their consumers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace heterosgt::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

class AdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A learnable tensor. The tape reads `value` without copying and
/// accumulates into `grad`; callers zero `grad` between steps.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  class Pass;
  using BackwardFn = std::function<void(Pass&)>;

  /// With record_gradients = false the tape only evaluates; no closures are
  /// kept and backward() is an error.
  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {
#ifndef NDEBUG
    check_finite_ = true;
#endif
  }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  void set_check_finite(bool on) { check_finite_ = on; }

  Var constant(Matrix v) {
    Node n;
    n.own = std::move(v);
    return push(std::move(n), "constant");
  }

  /// Differentiable leaf not backed by a Parameter; read its adjoint via grad().
  Var variable(Matrix v) {
    Node n;
    n.own = std::move(v);
    n.needs_grad = recording_;
    return push(std::move(n), "variable");
  }

  /// Leaf aliasing a parameter. Repeated calls for the same parameter return
  /// the same node.
  Var param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.needs_grad = recording_;
    Var v = push(std::move(n), "param");
    param_nodes_.emplace(&p, v.id());
    return v;
  }

  /// Append an op node. `always_grad` marks ops that write adjoints straight
  /// into parameters (sparse embedding gather) and so need a backward pass
  /// even with no differentiable inputs.
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn fn, const char* op,
             bool always_grad = false) {
    Node n;
    n.own = std::move(value);
    n.inputs.reserve(inputs.size());
    bool needs = always_grad;
    for (const Var& in : inputs) {
      check_owned(in);
      n.inputs.push_back(in.id());
      needs = needs || nodes_[in.id()].needs_grad;
    }
    n.needs_grad = recording_ && needs;
    if (n.needs_grad) n.backward = std::move(fn);
    return push(std::move(n), op);
  }

  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn, const char* op,
             bool always_grad = false) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(fn), op, always_grad);
  }

  const Matrix& value(Var v) const {
    check_owned(v);
    return nodes_[v.id()].value();
  }

  /// Adjoint of a non-parameter node after backward(); zeros if none reached it.
  Matrix grad(Var v) const {
    check_owned(v);
    const Node& n = nodes_[v.id()];
    if (n.param) return n.param->grad;
    if (n.has_grad) return n.grad;
    return Matrix::Zero(n.value().rows(), n.value().cols());
  }

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  /// Number of backward closures run by the last backward().
  std::size_t backward_steps() const { return backward_steps_; }

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Parameter* param = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;

    const Matrix& value() const { return external ? *external : own; }
  };

  Var push(Node n, const char* op) {
    if (check_finite_ && !n.value().allFinite())
      throw AdError(std::string("non-finite value produced by op '") + op + "'");
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  void check_owned(Var v) const {
    if (v.tape() != this || v.id() >= nodes_.size())
      throw AdError("tensor is not recorded on this tape");
  }

  Matrix& grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    if (!n.has_grad) {
      n.grad = Matrix::Zero(n.value().rows(), n.value().cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  bool recording_;
  bool check_finite_ = false;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  std::size_t backward_steps_ = 0;
};

/// View handed to backward closures.
class Tape::Pass {
 public:
  const Matrix& out_value() const { return node_.value(); }
  const Matrix& out_grad() const { return node_.grad; }
  const Matrix& in_value(std::size_t k) const { return tape_.nodes_[node_.inputs[k]].value(); }
  bool needs(std::size_t k) const { return tape_.nodes_[node_.inputs[k]].needs_grad; }
  Matrix& in_grad(std::size_t k) { return tape_.grad_slot(node_.inputs[k]); }

 private:
  friend class Tape;
  Pass(Tape& t, Node& n) : tape_(t), node_(n) {}
  Tape& tape_;
  Node& node_;
};

inline const Matrix& Var::value() const {
  if (!tape_) throw AdError("use of an unrecorded tensor");
  return tape_->value(*this);
}

inline void Tape::backward(Var loss) {
  check_owned(loss);
  if (!recording_) throw AdError("backward() on a tape that does not record gradients");
  Node& root = nodes_[loss.id()];
  if (root.value().rows() != 1 || root.value().cols() != 1)
    throw AdError("backward() needs a scalar loss");
  backward_steps_ = 0;
  if (!root.needs_grad) return;
  grad_slot(loss.id()) += Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    Pass pass(*this, n);
    n.backward(pass);
    ++backward_steps_;
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw AdError(what);
}
}  // namespace detail

inline Var matmul(Var a, Var b) {
  detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b}, [](Tape::Pass& p) {
    if (p.needs(0)) p.in_grad(0).noalias() += p.out_grad() * p.in_value(1).transpose();
    if (p.needs(1)) p.in_grad(1).noalias() += p.in_value(0).transpose() * p.out_grad();
  }, "matmul");
}

inline Var add(Var a, Var b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return a.tape()->record(a.value() + b.value(), {a, b}, [](Tape::Pass& p) {
    if (p.needs(0)) p.in_grad(0) += p.out_grad();
    if (p.needs(1)) p.in_grad(1) += p.out_grad();
  }, "add");
}

/// a (n x m) + row (1 x m) broadcast over rows.
inline Var add_row(Var a, Var row) {
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row: shape mismatch");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [](Tape::Pass& p) {
    if (p.needs(0)) p.in_grad(0) += p.out_grad();
    if (p.needs(1)) p.in_grad(1) += p.out_grad().colwise().sum();
  }, "add_row");
}

inline Var sub(Var a, Var b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return a.tape()->record(a.value() - b.value(), {a, b}, [](Tape::Pass& p) {
    if (p.needs(0)) p.in_grad(0) += p.out_grad();
    if (p.needs(1)) p.in_grad(1) -= p.out_grad();
  }, "sub");
}

inline Var mul(Var a, Var b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b}, [](Tape::Pass& p) {
    if (p.needs(0)) p.in_grad(0) += p.out_grad().cwiseProduct(p.in_value(1));
    if (p.needs(1)) p.in_grad(1) += p.out_grad().cwiseProduct(p.in_value(0));
  }, "mul");
}

inline Var scale(Var a, double s) {
  return a.tape()->record(a.value() * s, {a}, [s](Tape::Pass& p) {
    p.in_grad(0) += p.out_grad() * s;
  }, "scale");
}

inline Var add_scalar(Var a, double s) {
  Matrix out = a.value().array() + s;
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    p.in_grad(0) += p.out_grad();
  }, "add_scalar");
}

inline Var tanh(Var a) {
  Matrix out = a.value().array().tanh();
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    const auto& y = p.out_value().array();
    p.in_grad(0).array() += p.out_grad().array() * (1.0 - y * y);
  }, "tanh");
}

inline Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
  });
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    const auto& y = p.out_value().array();
    p.in_grad(0).array() += p.out_grad().array() * y * (1.0 - y);
  }, "sigmoid");
}

inline Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    p.in_grad(0).array() += (p.in_value(0).array() > 0.0).cast<double>() * p.out_grad().array();
  }, "relu");
}

inline Var exp(Var a) {
  Matrix out = a.value().array().exp();
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    p.in_grad(0).array() += p.out_grad().array() * p.out_value().array();
  }, "exp");
}

/// Natural log. Inputs below `floor` are clamped to it and pass no gradient.
inline Var log(Var a, double floor = 0.0) {
  Matrix out = a.value().unaryExpr([floor](double x) { return std::log(std::max(x, floor)); });
  return a.tape()->record(std::move(out), {a}, [floor](Tape::Pass& p) {
    const Matrix& x = p.in_value(0);
    Matrix& g = p.in_grad(0);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j)
        if (x(i, j) > floor) g(i, j) += p.out_grad()(i, j) / x(i, j);
  }, "log");
}

/// Row-wise softmax. When `column_mask` is given, columns with mask 0 get
/// exactly zero probability in every row.
inline Var softmax_rows(Var a, std::span<const unsigned char> column_mask = {}) {
  const Matrix& x = a.value();
  const bool masked = !column_mask.empty();
  detail::require(!masked || static_cast<Index>(column_mask.size()) == x.cols(),
                  "softmax_rows: mask length differs from column count");
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < x.cols(); ++j)
      if (!masked || column_mask[j]) mx = std::max(mx, x(i, j));
    detail::require(std::isfinite(mx), "softmax_rows: every column is masked");
    double total = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      if (masked && !column_mask[j]) continue;
      out(i, j) = std::exp(x(i, j) - mx);
      total += out(i, j);
    }
    out.row(i) /= total;
  }
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    const Matrix& y = p.out_value();
    const Matrix& g = p.out_grad();
    Eigen::VectorXd dot = y.cwiseProduct(g).rowwise().sum();
    p.in_grad(0).array() += y.array() * (g.colwise() - dot).array();
  }, "softmax_rows");
}

inline Var transpose(Var a) {
  Matrix out = a.value().transpose();
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    p.in_grad(0) += p.out_grad().transpose();
  }, "transpose");
}

inline Var concat_cols(std::span<const Var> parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  Index rows = parts[0].rows(), cols = 0;
  for (const Var& v : parts) {
    detail::require(v.rows() == rows, "concat_cols: row counts differ");
    cols += v.cols();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  Index at = 0;
  for (const Var& v : parts) {
    out.middleCols(at, v.cols()) = v.value();
    offsets.push_back(at);
    at += v.cols();
  }
  return parts[0].tape()->record(std::move(out), parts, [offsets](Tape::Pass& p) {
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (!p.needs(k)) continue;
      Matrix& g = p.in_grad(k);
      g += p.out_grad().middleCols(offsets[k], g.cols());
    }
  }, "concat_cols");
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var concat_rows(std::span<const Var> parts) {
  detail::require(!parts.empty(), "concat_rows: no inputs");
  Index cols = parts[0].cols(), rows = 0;
  for (const Var& v : parts) {
    detail::require(v.cols() == cols, "concat_rows: column counts differ");
    rows += v.rows();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  Index at = 0;
  for (const Var& v : parts) {
    out.middleRows(at, v.rows()) = v.value();
    offsets.push_back(at);
    at += v.rows();
  }
  return parts[0].tape()->record(std::move(out), parts, [offsets](Tape::Pass& p) {
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (!p.needs(k)) continue;
      Matrix& g = p.in_grad(k);
      g += p.out_grad().middleRows(offsets[k], g.rows());
    }
  }, "concat_rows");
}

inline Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var slice_rows(Var a, Index start, Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  Matrix out = a.value().middleRows(start, count);
  return a.tape()->record(std::move(out), {a}, [start, count](Tape::Pass& p) {
    p.in_grad(0).middleRows(start, count) += p.out_grad();
  }, "slice_rows");
}

inline Var slice_cols(Var a, Index start, Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  Matrix out = a.value().middleCols(start, count);
  return a.tape()->record(std::move(out), {a}, [start, count](Tape::Pass& p) {
    p.in_grad(0).middleCols(start, count) += p.out_grad();
  }, "slice_cols");
}

/// Rows of `a` selected by index (repeats allowed).
inline Var gather_rows(Var a, std::vector<Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::require(rows[i] >= 0 && rows[i] < a.rows(), "gather_rows: row out of range");
    out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  return a.tape()->record(std::move(out), {a}, [rows = std::move(rows)](Tape::Pass& p) {
    Matrix& g = p.in_grad(0);
    for (std::size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += p.out_grad().row(static_cast<Index>(i));
  }, "gather_rows");
}

/// Embedding lookup: rows of `table` by id. The backward pass adds only the
/// touched rows into table.grad.
inline Var embedding(Tape& tape, Parameter& table, std::span<const int> ids) {
  Matrix out(static_cast<Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    detail::require(ids[i] >= 0 && ids[i] < table.value.rows(), "embedding: id out of range");
    out.row(static_cast<Index>(i)) = table.value.row(ids[i]);
  }
  std::vector<int> keep(ids.begin(), ids.end());
  Parameter* target = &table;
  return tape.record(std::move(out), std::span<const Var>{}, [keep = std::move(keep), target](Tape::Pass& p) {
    for (std::size_t i = 0; i < keep.size(); ++i)
      target->grad.row(keep[i]) += p.out_grad().row(static_cast<Index>(i));
  }, "embedding", /*always_grad=*/true);
}

inline Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [](Tape::Pass& p) {
    p.in_grad(0).array() += p.out_grad()(0, 0);
  }, "sum");
}

/// Mean over rows: (n x m) -> (1 x m).
inline Var mean_rows(Var a) {
  detail::require(a.rows() > 0, "mean_rows: empty input");
  Matrix out = a.value().colwise().mean();
  const double inv = 1.0 / static_cast<double>(a.rows());
  return a.tape()->record(std::move(out), {a}, [inv](Tape::Pass& p) {
    p.in_grad(0).rowwise() += p.out_grad().row(0) * inv;
  }, "mean_rows");
}

/// Max over rows: (n x m) -> (1 x m). Ties route the adjoint to the lowest row.
inline Var max_rows(Var a) {
  detail::require(a.rows() > 0, "max_rows: empty input");
  const Matrix& x = a.value();
  Matrix out(1, x.cols());
  std::vector<Index> arg(static_cast<std::size_t>(x.cols()), 0);
  for (Index j = 0; j < x.cols(); ++j) {
    Index best = 0;
    for (Index i = 1; i < x.rows(); ++i)
      if (x(i, j) > x(best, j)) best = i;
    arg[static_cast<std::size_t>(j)] = best;
    out(0, j) = x(best, j);
  }
  return a.tape()->record(std::move(out), {a}, [arg = std::move(arg)](Tape::Pass& p) {
    Matrix& g = p.in_grad(0);
    for (std::size_t j = 0; j < arg.size(); ++j) g(arg[j], static_cast<Index>(j)) += p.out_grad()(0, static_cast<Index>(j));
  }, "max_rows");
}

/// Per-row layer normalisation with gain and bias rows (1 x m).
inline Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
  detail::require(gain.rows() == 1 && gain.cols() == x.cols() && bias.rows() == 1 && bias.cols() == x.cols(),
                  "layer_norm: gain/bias shape mismatch");
  const Matrix& in = x.value();
  const Index m = in.cols();
  Matrix xhat(in.rows(), m);
  Eigen::VectorXd inv_std(in.rows());
  for (Index i = 0; i < in.rows(); ++i) {
    double mu = in.row(i).mean();
    double var = (in.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (in.row(i).array() - mu) * inv_std(i);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  return x.tape()->record(std::move(out), {x, gain, bias}, [xhat, inv_std](Tape::Pass& p) {
    const Matrix& g = p.out_grad();
    if (p.needs(1)) p.in_grad(1) += g.cwiseProduct(xhat).colwise().sum();
    if (p.needs(2)) p.in_grad(2) += g.colwise().sum();
    if (p.needs(0)) {
      Matrix dxhat = g.array().rowwise() * p.in_value(1).row(0).array();
      Matrix& gx = p.in_grad(0);
      for (Index i = 0; i < dxhat.rows(); ++i) {
        double mean_d = dxhat.row(i).mean();
        double mean_dx = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
        gx.row(i).array() += inv_std(i) * (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx);
      }
    }
  }, "layer_norm");
}

}  // namespace heterosgt::ad
