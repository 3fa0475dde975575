#include "mstf/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace mstf {

namespace {

double elem_error(double g, double fd) {
  return std::abs(g - fd) / std::max({1.0, std::abs(g), std::abs(fd)});
}

}  // namespace

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h) {
  Parameter p("x", x);
  double base;
  {
    Tape t;
    Var y = f(t, t.leaf(p));
    if (y.value().size() != 1) {
      throw ShapeError("grad_check: f must be scalar-valued, got " + y.value().shape_str());
    }
    base = y.value()[0];
    (void)base;
    t.backward(y);
  }
  const Tensor analytic = p.grad;

  Parameter probe("x", x);
  auto eval = [&]() {
    Tape t;
    return f(t, t.leaf(probe)).value()[0];
  };
  double max_err = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    probe.value[i] = x0 + h;
    const double fp = eval();
    probe.value[i] = x0 - h;
    const double fm = eval();
    probe.value[i] = x0;
    const double fd = (fp - fm) / (2.0 * h);
    max_err = std::max(max_err, elem_error(analytic[i], fd));
  }
  return max_err;
}

double grad_check_params(std::span<Parameter* const> params,
                         const std::function<double()>& loss_value,
                         const std::function<void()>& compute_grads, double h) {
  compute_grads();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  double max_err = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (int64_t i = 0; i < p.value.size(); ++i) {
      const double x0 = p.value[i];
      p.value[i] = x0 + h;
      const double fp = loss_value();
      p.value[i] = x0 - h;
      const double fm = loss_value();
      p.value[i] = x0;
      const double fd = (fp - fm) / (2.0 * h);
      max_err = std::max(max_err, elem_error(analytic[k][i], fd));
    }
  }
  return max_err;
}

}  // namespace mstf
