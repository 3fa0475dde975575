#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstf/errors.hpp"

namespace mstf {

class Rng;

/// Dense row-major tensor of 64-bit floats. Plain value type with no graph
/// attachment; safe to copy and share.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);
  /// 2D tensor from row literals, e.g. Tensor::from_rows({{1,2},{3,4}}).
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Shape {1, n} row vector.
  static Tensor row(std::vector<double> values);
  static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);

  int rank() const { return static_cast<int>(shape_.size()); }
  int extent(int axis) const { return shape_[static_cast<size_t>(axis)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  // 2D accessors.
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// A named, trainable tensor with a persistent gradient buffer. Gradients
/// accumulate additively across Tape::backward calls until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad();
  int64_t size() const { return value.size(); }
};

class Tape;

/// Handle to a node in a Tape. Cheap to copy; invalid after the tape dies.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const std::vector<int>& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class BackwardOrder {
  reverse_creation,  // sweep node ids from the loss down
  topo_dfs,          // explicit depth-first topological order
};

/// Dynamic reverse-mode tape. Each forward op appends a node; backward()
/// walks the reachable subgraph once, accumulating gradients into parents
/// and flushing leaf gradients into their bound Parameters.
///
/// The graph is rebuilt per forward pass; a Tape is single-threaded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Node with no gradient (masks, targets, fixed encodings).
  Var constant(Tensor v);
  /// Leaf bound to a Parameter. Repeated calls for the same Parameter
  /// return the same node, so multi-use weights accumulate correctly.
  Var leaf(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and back-propagates. `loss` must be scalar
  /// (size 1). Visits every reachable gradient-carrying node exactly once.
  void backward(Var loss, BackwardOrder order = BackwardOrder::reverse_creation);

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  /// Gradient at a node from the most recent backward().
  const Tensor& grad(Var v) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }
  /// Number of nodes whose backward hook ran in the last backward().
  int last_backward_visits() const { return last_visits_; }

  // ---- internals for op implementations ----
  using BackFn = std::function<void(Tape&, int self)>;
  Var make_node(Tensor value, std::vector<int> parents, BackFn back);
  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  Tensor& grad_buf(int id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool reachable = false;
    Parameter* bound = nullptr;
    std::vector<int> parents;
    BackFn back;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> leaf_ids_;
  int last_visits_ = 0;
};

// ---- differentiable operations ----
// All ops are 2D unless noted. Shape violations throw ShapeError with the
// offending extents in the message.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);   // same shape
Var sub(Var a, Var b);   // same shape
Var mul(Var a, Var b);   // elementwise, same shape
Var scale(Var a, double s);
/// Broadcasts a {1, n} row over every row of a {m, n} tensor.
Var add_rowvec(Var a, Var row);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// Row-wise softmax with max subtraction; each output row sums to 1.
Var softmax_rows(Var a);
/// Softmax treating entries with mask == 0 as negative infinity: they get
/// exactly zero weight and exactly zero gradient. `mask` is a constant 0/1
/// tensor of the same shape; a row with no admissible entry throws
/// NumericError.
Var masked_softmax_rows(Var a, const Tensor& mask);
/// Per-row normalization to zero mean / unit variance, then gamma * x + beta.
/// gamma and beta are {1, n}.
Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);
Var concat(std::span<const Var> parts, int axis);
Var slice(Var a, int axis, int start, int count);
/// Sum of all entries; result shape {1, 1}.
Var sum_all(Var a);
/// out[i, :] = sum of rows 0..i of the input.
Var cumsum_rows(Var a);

/// matmul(x, w) + row bias.
inline Var linear(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

}  // namespace mstf
