#include "seb/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seb/error.hpp"

namespace seb {

namespace {

double scalar_of(ad::Var v) {
  if (v.value().size() != 1) {
    throw ContractError("gradient check needs a scalar function, got shape " + shape_to_string(v.value().shape()));
  }
  return v.value()[0];
}

void consider(GradCheckResult& res, std::size_t index, double analytic, double numeric) {
  double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
  if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
  if (err > res.max_relative_error || index == 0) {
    res.max_relative_error = std::max(err, res.max_relative_error);
    res.worst_index = index;
    res.analytic = analytic;
    res.numeric = numeric;
  }
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const Tensor& point, double h) {
  if (!(h > 0.0)) throw ContractError("finite-difference step must be positive");
  Tensor analytic;
  {
    ad::Graph g;
    ad::Var x = g.variable(point);
    ad::Var y = f(g, x);
    scalar_of(y);
    g.backward(y);
    analytic = g.grad(x);
  }
  auto eval = [&](const Tensor& p) {
    ad::Graph g(false);
    return scalar_of(f(g, g.constant(p)));
  };
  GradCheckResult res;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const double up = eval(probe);
    probe[i] = point[i] - h;
    const double down = eval(probe);
    probe[i] = point[i];
    consider(res, i, analytic[i], (up - down) / (2.0 * h));
  }
  return res;
}

GradCheckResult grad_check_params(const LossFn& loss, std::span<Param* const> params, double h) {
  if (!(h > 0.0)) throw ContractError("finite-difference step must be positive");
  for (Param* p : params) p->zero_grad();
  {
    ad::Graph g;
    ad::Var y = loss(g);
    scalar_of(y);
    g.backward(y);
  }
  auto eval = [&]() {
    ad::Graph g(false);
    return scalar_of(loss(g));
  };
  GradCheckResult res;
  std::size_t flat = 0;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i, ++flat) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      consider(res, flat, p->grad[i], (up - down) / (2.0 * h));
    }
  }
  return res;
}

}  // namespace seb
