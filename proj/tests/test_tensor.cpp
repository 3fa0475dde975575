#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mstf/grad_check.hpp"
#include "mstf/rng.hpp"
#include "mstf/tensor.hpp"

using namespace mstf;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Tensor::uniform(std::move(shape), lo, hi, rng);
}

// Scalar objective sum(op(x) * w) with a fixed random weighting so every
// output entry gets a distinct gradient contribution.
double weighted_fd_check(const std::function<Var(Tape&, Var)>& op, const Tensor& x,
                         const Tensor& w) {
  auto f = [&](Tape& t, Var vx) { return sum_all(mul(op(t, vx), t.constant(w))); };
  return grad_check(f, x);
}

}  // namespace

TEST_CASE("matmul identity and hand-checked products") {
  Tape t;
  Var a = t.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
  Var b = t.constant(Tensor::from_rows({{3, 4}, {5, 6}}));
  Tensor p = matmul(a, b).value();
  CHECK(p.at(0, 0) == 3.0);
  CHECK(p.at(0, 1) == 4.0);
  CHECK(p.at(1, 0) == 5.0);
  CHECK(p.at(1, 1) == 6.0);

  Var r = t.constant(Tensor::from_rows({{1, 2}}));
  Var c = t.constant(Tensor::from_rows({{3}, {4}}));
  Tensor s = matmul(r, c).value();
  CHECK(s.size() == 1);
  CHECK(s[0] == 11.0);
}

TEST_CASE("matmul rejects mismatched inner extents with a shape diagnostic") {
  Tape t;
  Var a = t.constant(Tensor({2, 3}));
  Var b = t.constant(Tensor({2, 2}));
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), ShapeError);
}

TEST_CASE("matmul backward: d(sum)/da equals ones * b^T and matches finite differences") {
  Rng rng(41);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);

  Parameter pa("a", a);
  Tape t;
  Var out = matmul(t.leaf(pa), t.constant(b));
  t.backward(sum_all(out));

  // Closed form: gradient of sum of outputs w.r.t. a is ones(3x2) * b^T.
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) {
      double expect = 0.0;
      for (int j = 0; j < 2; ++j) expect += b.at(k, j);
      CHECK(pa.grad.at(i, k) == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  auto f = [&](Tape& tp, Var va) { return sum_all(matmul(va, tp.constant(b))); };
  CHECK(grad_check(f, a) < 1e-6);
}

TEST_CASE("softmax_rows frozen examples") {
  Tape t;
  Tensor u = softmax_rows(t.constant(Tensor::from_rows({{0, 0, 0}}))).value();
  for (int j = 0; j < 3; ++j) CHECK(u[j] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  // Max subtraction keeps large equal logits from overflowing.
  Tensor big = softmax_rows(t.constant(Tensor::from_rows({{1000, 1000}}))).value();
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);

  // Closed form e^0 / (e^0 + 3).
  Tensor ln3 = softmax_rows(t.constant(Tensor::from_rows({{0.0, std::log(3.0)}}))).value();
  CHECK(ln3[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ln3[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax_rows: rows sum to 1 and shift invariance") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({4, 6}, rng, -3.0, 3.0);
    Tape t;
    Tensor p = softmax_rows(t.constant(x)).value();
    Tensor shifted = x;
    const double c = rng.uniform(-50.0, 50.0);
    for (int j = 0; j < 6; ++j) shifted.at(2, j) += c;
    Tensor p2 = softmax_rows(t.constant(shifted)).value();
    for (int i = 0; i < 4; ++i) {
      double s = 0.0;
      for (int j = 0; j < 6; ++j) s += p.at(i, j);
      CHECK(std::abs(s - 1.0) < 1e-12);
      for (int j = 0; j < 6; ++j) CHECK(std::abs(p2.at(i, j) - p.at(i, j)) < 1e-12);
    }
  }
}

TEST_CASE("masked softmax: masked entries get exactly zero weight and zero gradient") {
  Tensor mask = Tensor::from_rows({{1, 0, 1, 0}, {0, 1, 1, 1}});
  Rng rng(11);
  Tensor x = random_tensor({2, 4}, rng, -2.0, 2.0);

  Parameter px("x", x);
  Tape t;
  Var p = masked_softmax_rows(t.leaf(px), mask);
  const Tensor& pv = p.value();
  for (int i = 0; i < 2; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (mask.at(i, j) == 0.0) CHECK(pv.at(i, j) == 0.0);
      CHECK(pv.at(i, j) >= 0.0);
      s += pv.at(i, j);
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  t.backward(sum_all(mul(p, t.constant(random_tensor({2, 4}, rng)))));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (mask.at(i, j) == 0.0) CHECK(px.grad.at(i, j) == 0.0);
    }
  }

  // Output is bit-independent of the logit value at a masked position.
  Tensor x2 = x;
  x2.at(0, 1) += 1e6;
  Tape t2;
  Tensor pv2 = masked_softmax_rows(t2.constant(x2), mask).value();
  for (int j = 0; j < 4; ++j) CHECK(pv2.at(0, j) == pv.at(0, j));
}

TEST_CASE("masked softmax rejects a fully masked row") {
  Tape t;
  Tensor mask = Tensor::from_rows({{0, 0}, {1, 0}});
  CHECK_THROWS_AS(masked_softmax_rows(t.constant(Tensor({2, 2})), mask), NumericError);
}

TEST_CASE("every differentiable op matches central finite differences") {
  Rng rng(2024);
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    Rng tr = rng.derive(static_cast<uint64_t>(trial));
    Tensor x = random_tensor({3, 4}, tr);
    Tensor w34 = random_tensor({3, 4}, tr);
    Tensor w43 = random_tensor({4, 3}, tr);
    Tensor y = random_tensor({3, 4}, tr);
    Tensor w45 = random_tensor({4, 5}, tr);
    Tensor w35 = random_tensor({3, 5}, tr);
    Tensor row = random_tensor({1, 4}, tr);
    Tensor w64 = random_tensor({6, 4}, tr);

    CHECK(weighted_fd_check([&](Tape& t, Var v) { return matmul(v, t.constant(w45)); }, x, w35) <
          1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return transpose(v); }, x, w43) < 1e-5);
    CHECK(weighted_fd_check([&](Tape& t, Var v) { return add(v, t.constant(y)); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([&](Tape& t, Var v) { return sub(t.constant(y), v); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([&](Tape& t, Var v) { return mul(v, t.constant(y)); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return scale(v, -1.7); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return relu(v); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return mstf::tanh(v); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return sigmoid(v); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return softmax_rows(v); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return cumsum_rows(v); }, x, w34) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return slice(v, 0, 1, 2); },
                            x, random_tensor({2, 4}, tr)) < 1e-5);
    CHECK(weighted_fd_check([](Tape&, Var v) { return slice(v, 1, 1, 3); },
                            x, random_tensor({3, 3}, tr)) < 1e-5);
    CHECK(weighted_fd_check(
              [&](Tape& t, Var v) {
                std::vector<Var> parts = {v, t.constant(y)};
                return concat(parts, 0);
              },
              x, w64) < 1e-5);

    // Row-vector broadcast: check gradient w.r.t. the row itself.
    auto frow = [&](Tape& t, Var vrow) {
      return sum_all(mul(add_rowvec(t.constant(x), vrow), t.constant(w34)));
    };
    CHECK(grad_check(frow, row) < 1e-5);

    Tensor mask({3, 4});
    for (int i = 0; i < 3; ++i) {
      mask.at(i, static_cast<int>(tr.uniform_int(0, 3))) = 1.0;
      for (int j = 0; j < 4; ++j) {
        if (tr.next_unit() < 0.5) mask.at(i, j) = 1.0;
      }
    }
    CHECK(weighted_fd_check([&](Tape&, Var v) { return masked_softmax_rows(v, mask); }, x, w34) <
          1e-5);

    Tensor gamma = random_tensor({1, 4}, tr, 0.5, 1.5);
    Tensor beta = random_tensor({1, 4}, tr);
    CHECK(weighted_fd_check(
              [&](Tape& t, Var v) {
                return layer_norm_rows(v, t.constant(gamma), t.constant(beta));
              },
              x, w34) < 1e-5);
    auto fgamma = [&](Tape& t, Var vg) {
      return sum_all(mul(layer_norm_rows(t.constant(x), vg, t.constant(beta)), t.constant(w34)));
    };
    CHECK(grad_check(fgamma, gamma) < 1e-5);
    auto fbeta = [&](Tape& t, Var vb) {
      return sum_all(mul(layer_norm_rows(t.constant(x), t.constant(gamma), vb), t.constant(w34)));
    };
    CHECK(grad_check(fbeta, beta) < 1e-5);
  }
}

TEST_CASE("backward visits each node once and both traversal orders agree") {
  Rng rng(5);
  Tensor x = random_tensor({3, 3}, rng);
  Tensor w = random_tensor({3, 3}, rng);

  auto build = [&](Parameter& p, Tape& t) {
    // Diamond dependencies: x feeds two branches that merge.
    Var vx = t.leaf(p);
    Var a = relu(vx);
    Var b = mstf::tanh(vx);
    Var c = mul(a, b);
    Var d = matmul(c, t.constant(w));
    return sum_all(add(d, matmul(a, t.constant(w))));
  };

  Parameter p1("x", x);
  Tape t1;
  Var l1 = build(p1, t1);
  t1.backward(l1, BackwardOrder::reverse_creation);
  const int visited = t1.last_backward_visits();
  // leaf, relu, tanh, mul, 2x matmul, add, sum, loss-side nodes; constants skipped
  CHECK(visited == 8);

  Parameter p2("x", x);
  Tape t2;
  Var l2 = build(p2, t2);
  t2.backward(l2, BackwardOrder::topo_dfs);
  CHECK(t2.last_backward_visits() == visited);

  for (int64_t i = 0; i < p1.grad.size(); ++i) {
    CHECK(std::abs(p1.grad[i] - p2.grad[i]) < 1e-12);
  }

  auto f = [&](Tape& t, Var v) {
    Var a = relu(v);
    Var b = mstf::tanh(v);
    Var c = mul(a, b);
    Var d = matmul(c, t.constant(w));
    return sum_all(add(d, matmul(a, t.constant(w))));
  };
  CHECK(grad_check(f, x) < 1e-5);
}

TEST_CASE("repeated leaf binding reuses one node and accumulates correctly") {
  Parameter p("x", Tensor::from_rows({{2, 3}}));
  Tape t;
  Var a = t.leaf(p);
  Var b = t.leaf(p);
  CHECK(a.id() == b.id());
  t.backward(sum_all(add(a, b)));
  CHECK(p.grad[0] == 2.0);
  CHECK(p.grad[1] == 2.0);
}

TEST_CASE("parameter gradients accumulate across backward calls until zeroed") {
  Parameter p("x", Tensor::from_rows({{1.0}}));
  for (int pass = 0; pass < 2; ++pass) {
    Tape t;
    t.backward(sum_all(scale(t.leaf(p), 3.0)));
  }
  CHECK(p.grad[0] == 6.0);
  p.zero_grad();
  CHECK(p.grad[0] == 0.0);
}

TEST_CASE("tensor shape/data coherence is enforced") {
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::from_rows({{1, 2}, {3}}), ShapeError);
  Tensor ok({2, 2}, {1, 2, 3, 4});
  CHECK(ok.size() == 4);
}

TEST_CASE("forward ops on finite inputs stay finite") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = random_tensor({4, 4}, rng, -100.0, 100.0);
    Tape t;
    Var v = t.constant(x);
    CHECK(softmax_rows(v).value().all_finite());
    CHECK(sigmoid(scale(v, 50.0)).value().all_finite());
    CHECK(mstf::tanh(scale(v, 50.0)).value().all_finite());
    CHECK(layer_norm_rows(v, t.constant(Tensor::full({1, 4}, 1.0)),
                          t.constant(Tensor({1, 4})))
              .value()
              .all_finite());
  }
}

TEST_CASE("concat, slice and cumsum hand values") {
  Tape t;
  Var a = t.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
  Var b = t.constant(Tensor::from_rows({{5, 6}}));
  std::vector<Var> parts = {a, b};
  Tensor cat0 = concat(parts, 0).value();
  CHECK(cat0.rows() == 3);
  CHECK(cat0.at(2, 1) == 6.0);

  std::vector<Var> parts1 = {a, a};
  Tensor cat1 = concat(parts1, 1).value();
  CHECK(cat1.cols() == 4);
  CHECK(cat1.at(1, 3) == 4.0);

  Tensor sl = slice(concat(parts, 0), 0, 1, 2).value();
  CHECK(sl.at(0, 0) == 3.0);
  CHECK(sl.at(1, 0) == 5.0);

  Tensor cs = cumsum_rows(a).value();
  CHECK(cs.at(0, 0) == 1.0);
  CHECK(cs.at(1, 0) == 4.0);
  CHECK(cs.at(1, 1) == 6.0);

  CHECK_THROWS_AS(slice(a, 0, 1, 5), ShapeError);
  CHECK_THROWS_AS(concat(std::span<const Var>{}, 0), ShapeError);
}

TEST_CASE("rng: determinism and stream independence") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng root(9);
  Rng s1 = root.derive("alpha");
  Rng s2 = root.derive("beta");
  CHECK(s1.next_u64() != s2.next_u64());
  // Deriving does not advance the parent.
  Rng r1(9), r2(9);
  (void)r1.derive("alpha");
  CHECK(r1.next_u64() == r2.next_u64());

  Rng u(77);
  for (int i = 0; i < 1000; ++i) {
    int64_t v = u.uniform_int(3, 7);
    CHECK(v >= 3);
    CHECK(v <= 7);
    double d = u.next_unit();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}
