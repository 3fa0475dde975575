#include "mstf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mstf/rng.hpp"

namespace mstf {

namespace {

int64_t shape_product(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape");
    n *= e;
  }
  return n;
}

std::string shape_to_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// c (m x n) += a (m x k) * b (k x n)
void mm(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<int64_t>(i) * k;
    double* ci = c + static_cast<int64_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + static_cast<int64_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// c (m x k) += a (m x n) * b (k x n)^T
void mm_abt(const double* a, const double* b, double* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<int64_t>(i) * n;
    double* ci = c + static_cast<int64_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double* bl = b + static_cast<int64_t>(l) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += ai[j] * bl[j];
      ci[l] += acc;
    }
  }
}

// c (k x n) += a (m x k)^T * b (m x n)
void mm_atb(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<int64_t>(i) * k;
    const double* bi = b + static_cast<int64_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      double* cl = c + static_cast<int64_t>(l) * n;
      for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a 2D tensor, got " + t.shape_str());
  }
}

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw ShapeError(std::string(op) + ": operands belong to different tapes");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_product(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("Tensor: shape " + shape_to_str(shape_) + " does not match data length " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  int m = static_cast<int>(rows.size());
  int n = m ? static_cast<int>(rows.begin()->size()) : 0;
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m) * static_cast<size_t>(n));
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != n) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::row(std::vector<double> values) {
  int n = static_cast<int>(values.size());
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

std::string Tensor::shape_str() const { return shape_to_str(shape_); }

int Tensor::rows() const {
  require_2d(*this, "rows");
  return shape_[0];
}

int Tensor::cols() const {
  require_2d(*this, "cols");
  return shape_[1];
}

double& Tensor::at(int r, int c) {
  return data_[static_cast<size_t>(r) * static_cast<size_t>(shape_[1]) + static_cast<size_t>(c)];
}

double Tensor::at(int r, int c) const {
  return data_[static_cast<size_t>(r) * static_cast<size_t>(shape_[1]) + static_cast<size_t>(c)];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parameter

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

void Parameter::zero_grad() {
  std::fill(grad.data(), grad.data() + grad.size(), 0.0);
}

// ---------------------------------------------------------------------------
// Tape

const Tensor& Var::value() const {
  if (!tape_) throw ShapeError("Var: use of an empty handle");
  return tape_->value(id_);
}

Var Tape::constant(Tensor v) { return make_node(std::move(v), {}, nullptr); }

Var Tape::leaf(Parameter& p) {
  auto it = leaf_ids_.find(&p);
  if (it != leaf_ids_.end()) return Var(this, it->second);
  Var v = make_node(p.value, {}, nullptr);
  Node& node = nodes_[static_cast<size_t>(v.id())];
  node.requires_grad = true;
  node.bound = &p;
  leaf_ids_.emplace(&p, v.id());
  return v;
}

Var Tape::make_node(Tensor value, std::vector<int> parents, BackFn back) {
  Node node;
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.back = std::move(back);
  for (int pid : node.parents) {
    if (nodes_[static_cast<size_t>(pid)].requires_grad) {
      node.requires_grad = true;
      break;
    }
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad_buf(int id) { return nodes_[static_cast<size_t>(id)].grad; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id())];
  if (!n.reachable) {
    throw ShapeError("Tape::grad: node was not visited by the last backward()");
  }
  return n.grad;
}

void Tape::backward(Var loss, BackwardOrder order) {
  if (!loss.valid() || &loss.tape() != this) throw ShapeError("backward: loss not on this tape");
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + value(loss.id()).shape_str());
  }

  // Mark gradient-carrying ancestors of the loss.
  for (Node& n : nodes_) n.reachable = false;
  if (!nodes_[static_cast<size_t>(loss.id())].requires_grad) {
    last_visits_ = 0;
    return;  // loss does not depend on any parameter
  }
  std::vector<int> stack = {loss.id()};
  nodes_[static_cast<size_t>(loss.id())].reachable = true;
  std::vector<int> order_list;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    for (int pid : nodes_[static_cast<size_t>(id)].parents) {
      Node& p = nodes_[static_cast<size_t>(pid)];
      if (p.requires_grad && !p.reachable) {
        p.reachable = true;
        stack.push_back(pid);
      }
    }
  }

  for (Node& n : nodes_) {
    if (n.reachable) {
      n.grad = Tensor(n.value.shape());
    }
  }
  grad_buf(loss.id())[0] = 1.0;

  auto process = [this](int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.back) n.back(*this, id);
    if (n.bound) {
      Tensor& pg = n.bound->grad;
      for (int64_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    }
    ++last_visits_;
  };

  last_visits_ = 0;
  if (order == BackwardOrder::reverse_creation) {
    for (int id = loss.id(); id >= 0; --id) {
      if (nodes_[static_cast<size_t>(id)].reachable) process(id);
    }
  } else {
    // Iterative post-order DFS over parent edges: producers land before
    // consumers, so the reversed list is a valid backward order.
    order_list.clear();
    std::vector<char> opened(nodes_.size(), 0), done(nodes_.size(), 0);
    std::vector<int> dfs = {loss.id()};
    while (!dfs.empty()) {
      int id = dfs.back();
      if (done[static_cast<size_t>(id)]) {
        dfs.pop_back();
        continue;
      }
      if (opened[static_cast<size_t>(id)]) {
        done[static_cast<size_t>(id)] = 1;
        order_list.push_back(id);
        dfs.pop_back();
        continue;
      }
      opened[static_cast<size_t>(id)] = 1;
      for (int pid : nodes_[static_cast<size_t>(id)].parents) {
        const Node& p = nodes_[static_cast<size_t>(pid)];
        if (p.reachable && !done[static_cast<size_t>(pid)]) dfs.push_back(pid);
      }
    }
    for (auto it = order_list.rbegin(); it != order_list.rend(); ++it) process(*it);
  }
}

// ---------------------------------------------------------------------------
// Ops

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Tape& t = a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_2d(av, "matmul");
  require_2d(bv, "matmul");
  const int m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw ShapeError("matmul: inner extents differ, " + av.shape_str() + " x " + bv.shape_str());
  }
  Tensor out({m, n});
  mm(av.data(), bv.data(), out.data(), m, k, n);
  const int aid = a.id(), bid = b.id();
  return t.make_node(std::move(out), {aid, bid}, [aid, bid, m, k, n](Tape& tp, int self) {
    const Tensor& g = tp.grad_buf(self);
    if (tp.needs_grad(aid)) {
      mm_abt(g.data(), tp.value(bid).data(), tp.grad_buf(aid).data(), m, n, k);
    }
    if (tp.needs_grad(bid)) {
      mm_atb(tp.value(aid).data(), g.data(), tp.grad_buf(bid).data(), m, k, n);
    }
  });
}

Var transpose(Var a) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  require_2d(av, "transpose");
  const int m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  }
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, m, n](Tape& tp, int self) {
    if (!tp.needs_grad(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    Tensor& ga = tp.grad_buf(aid);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
    }
  });
}

namespace {

Var binary_same_shape(Var a, Var b, const char* name,
                      const std::function<double(double, double)>& f,
                      const std::function<void(Tape&, int, int, int)>& back) {
  require_same_tape(a, b, name);
  Tape& t = a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ShapeError(std::string(name) + ": shape mismatch, " + av.shape_str() + " vs " +
                     bv.shape_str());
  }
  Tensor out(av.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  const int aid = a.id(), bid = b.id();
  return t.make_node(std::move(out), {aid, bid},
                     [aid, bid, back](Tape& tp, int self) { back(tp, self, aid, bid); });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_same_shape(
      a, b, "add", [](double x, double y) { return x + y; },
      [](Tape& tp, int self, int aid, int bid) {
        const Tensor& g = tp.grad_buf(self);
        if (tp.needs_grad(aid)) {
          Tensor& ga = tp.grad_buf(aid);
          for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.needs_grad(bid)) {
          Tensor& gb = tp.grad_buf(bid);
          for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      });
}

Var sub(Var a, Var b) {
  return binary_same_shape(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](Tape& tp, int self, int aid, int bid) {
        const Tensor& g = tp.grad_buf(self);
        if (tp.needs_grad(aid)) {
          Tensor& ga = tp.grad_buf(aid);
          for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.needs_grad(bid)) {
          Tensor& gb = tp.grad_buf(bid);
          for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
      });
}

Var mul(Var a, Var b) {
  return binary_same_shape(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](Tape& tp, int self, int aid, int bid) {
        const Tensor& g = tp.grad_buf(self);
        if (tp.needs_grad(aid)) {
          Tensor& ga = tp.grad_buf(aid);
          const Tensor& bv = tp.value(bid);
          for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (tp.needs_grad(bid)) {
          Tensor& gb = tp.grad_buf(bid);
          const Tensor& av = tp.value(aid);
          for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
      });
}

Var scale(Var a, double s) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, s](Tape& tp, int self) {
    if (!tp.needs_grad(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    Tensor& ga = tp.grad_buf(aid);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

Var add_rowvec(Var a, Var row) {
  require_same_tape(a, row, "add_rowvec");
  Tape& t = a.tape();
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_2d(av, "add_rowvec");
  if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_rowvec: row " + rv.shape_str() + " does not broadcast over " +
                     av.shape_str());
  }
  const int m = av.rows(), n = av.cols();
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) + rv[j];
  }
  const int aid = a.id(), rid = row.id();
  return t.make_node(std::move(out), {aid, rid}, [aid, rid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad_buf(self);
    if (tp.needs_grad(aid)) {
      Tensor& ga = tp.grad_buf(aid);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(rid)) {
      Tensor& gr = tp.grad_buf(rid);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) gr[j] += g.at(i, j);
      }
    }
  });
}

namespace {

Var unary_elementwise(Var a, const std::function<double(double)>& f,
                      // dgrad(in_value, out_value) -> local derivative
                      const std::function<double(double, double)>& dgrad) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, dgrad](Tape& tp, int self) {
    if (!tp.needs_grad(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    const Tensor& in = tp.value(aid);
    const Tensor& outv = tp.value(self);
    Tensor& ga = tp.grad_buf(aid);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dgrad(in[i], outv[i]);
  });
}

}  // namespace

Var relu(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary_elementwise(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

namespace {

// Shared backward for (masked) softmax: dx = p * (g - sum(g*p)) per row.
void softmax_backward(Tape& tp, int self, int aid, int m, int n) {
  if (!tp.needs_grad(aid)) return;
  const Tensor& g = tp.grad_buf(self);
  const Tensor& p = tp.value(self);
  Tensor& ga = tp.grad_buf(aid);
  for (int i = 0; i < m; ++i) {
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += g.at(i, j) * p.at(i, j);
    for (int j = 0; j < n; ++j) ga.at(i, j) += p.at(i, j) * (g.at(i, j) - dot);
  }
}

}  // namespace

Var softmax_rows(Var a) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  require_2d(av, "softmax_rows");
  const int m = av.rows(), n = av.cols();
  if (n == 0) throw ShapeError("softmax_rows: empty rows");
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    double mx = av.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, av.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(av.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
  }
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, m, n](Tape& tp, int self) {
    softmax_backward(tp, self, aid, m, n);
  });
}

Var masked_softmax_rows(Var a, const Tensor& mask) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  require_2d(av, "masked_softmax_rows");
  if (!av.same_shape(mask)) {
    throw ShapeError("masked_softmax_rows: mask " + mask.shape_str() + " vs input " +
                     av.shape_str());
  }
  const int m = av.rows(), n = av.cols();
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (mask.at(i, j) != 0.0) mx = std::max(mx, av.at(i, j));
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw NumericError("masked_softmax_rows: row " + std::to_string(i) +
                         " has no admissible entries");
    }
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = mask.at(i, j) != 0.0 ? std::exp(av.at(i, j) - mx) : 0.0;
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
  }
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, m, n](Tape& tp, int self) {
    softmax_backward(tp, self, aid, m, n);
  });
}

Var layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  require_same_tape(a, gamma, "layer_norm_rows");
  require_same_tape(a, beta, "layer_norm_rows");
  Tape& t = a.tape();
  const Tensor& av = a.value();
  require_2d(av, "layer_norm_rows");
  const int m = av.rows(), n = av.cols();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  if (gv.rank() != 2 || gv.rows() != 1 || gv.cols() != n || !gv.same_shape(bv)) {
    throw ShapeError("layer_norm_rows: gamma/beta must be [1x" + std::to_string(n) + "], got " +
                     gv.shape_str() + " and " + bv.shape_str());
  }
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += av.at(i, j);
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = av.at(i, j) - mu;
      var += d * d;
    }
    var /= n;
    double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) out.at(i, j) = (av.at(i, j) - mu) * inv * gv[j] + bv[j];
  }
  const int aid = a.id(), gid = gamma.id(), bid = beta.id();
  return t.make_node(std::move(out), {aid, gid, bid}, [aid, gid, bid, m, n, eps](Tape& tp,
                                                                                 int self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& x = tp.value(aid);
    const Tensor& gv = tp.value(gid);
    for (int i = 0; i < m; ++i) {
      double mu = 0.0;
      for (int j = 0; j < n; ++j) mu += x.at(i, j);
      mu /= n;
      double var = 0.0;
      for (int j = 0; j < n; ++j) {
        double d = x.at(i, j) - mu;
        var += d * d;
      }
      var /= n;
      double inv = 1.0 / std::sqrt(var + eps);

      if (tp.needs_grad(gid)) {
        Tensor& gg = tp.grad_buf(gid);
        for (int j = 0; j < n; ++j) gg[j] += g.at(i, j) * (x.at(i, j) - mu) * inv;
      }
      if (tp.needs_grad(bid)) {
        Tensor& gb = tp.grad_buf(bid);
        for (int j = 0; j < n; ++j) gb[j] += g.at(i, j);
      }
      if (tp.needs_grad(aid)) {
        Tensor& ga = tp.grad_buf(aid);
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < n; ++j) {
          double gy = g.at(i, j) * gv[j];
          double xh = (x.at(i, j) - mu) * inv;
          m1 += gy;
          m2 += gy * xh;
        }
        m1 /= n;
        m2 /= n;
        for (int j = 0; j < n; ++j) {
          double gy = g.at(i, j) * gv[j];
          double xh = (x.at(i, j) - mu) * inv;
          ga.at(i, j) += inv * (gy - m1 - xh * m2);
        }
      }
    }
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape& t = parts[0].tape();
  const int other = 1 - axis;
  const int fixed = parts[0].value().extent(other);
  int total = 0;
  std::vector<int> parent_ids;
  parent_ids.reserve(parts.size());
  for (const Var& p : parts) {
    require_same_tape(parts[0], p, "concat");
    require_2d(p.value(), "concat");
    if (p.value().extent(other) != fixed) {
      throw ShapeError("concat: extent mismatch on axis " + std::to_string(other) + ", " +
                       parts[0].value().shape_str() + " vs " + p.value().shape_str());
    }
    total += p.value().extent(axis);
    parent_ids.push_back(p.id());
  }
  Tensor out(axis == 0 ? std::vector<int>{total, fixed} : std::vector<int>{fixed, total});
  int offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const int pm = pv.rows(), pn = pv.cols();
    for (int i = 0; i < pm; ++i) {
      for (int j = 0; j < pn; ++j) {
        if (axis == 0) {
          out.at(offset + i, j) = pv.at(i, j);
        } else {
          out.at(i, offset + j) = pv.at(i, j);
        }
      }
    }
    offset += pv.extent(axis);
  }
  return t.make_node(std::move(out), parent_ids, [parent_ids, axis](Tape& tp, int self) {
    const Tensor& g = tp.grad_buf(self);
    int offset = 0;
    for (int pid : parent_ids) {
      const Tensor& pv = tp.value(pid);
      const int pm = pv.rows(), pn = pv.cols();
      if (tp.needs_grad(pid)) {
        Tensor& gp = tp.grad_buf(pid);
        for (int i = 0; i < pm; ++i) {
          for (int j = 0; j < pn; ++j) {
            gp.at(i, j) += axis == 0 ? g.at(offset + i, j) : g.at(i, offset + j);
          }
        }
      }
      offset += pv.extent(axis);
    }
  });
}

Var slice(Var a, int axis, int start, int count) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  require_2d(av, "slice");
  if (axis != 0 && axis != 1) throw ShapeError("slice: axis must be 0 or 1");
  if (start < 0 || count < 1 || start + count > av.extent(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of bounds for " + av.shape_str());
  }
  const int m = av.rows(), n = av.cols();
  Tensor out(axis == 0 ? std::vector<int>{count, n} : std::vector<int>{m, count});
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) {
      out.at(i, j) = axis == 0 ? av.at(start + i, j) : av.at(i, start + j);
    }
  }
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, axis, start](Tape& tp, int self) {
    if (!tp.needs_grad(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    Tensor& ga = tp.grad_buf(aid);
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < g.cols(); ++j) {
        if (axis == 0) {
          ga.at(start + i, j) += g.at(i, j);
        } else {
          ga.at(i, start + j) += g.at(i, j);
        }
      }
    }
  });
}

Var sum_all(Var a) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  double s = 0.0;
  for (int64_t i = 0; i < av.size(); ++i) s += av[i];
  const int aid = a.id();
  return t.make_node(Tensor({1, 1}, {s}), {aid}, [aid](Tape& tp, int self) {
    if (!tp.needs_grad(aid)) return;
    const double g = tp.grad_buf(self)[0];
    Tensor& ga = tp.grad_buf(aid);
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var cumsum_rows(Var a) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  require_2d(av, "cumsum_rows");
  const int m = av.rows(), n = av.cols();
  Tensor out({m, n});
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      acc += av.at(i, j);
      out.at(i, j) = acc;
    }
  }
  const int aid = a.id();
  return t.make_node(std::move(out), {aid}, [aid, m, n](Tape& tp, int self) {
    if (!tp.needs_grad(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    Tensor& ga = tp.grad_buf(aid);
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = m - 1; i >= 0; --i) {
        acc += g.at(i, j);
        ga.at(i, j) += acc;
      }
    }
  });
}

}  // namespace mstf
