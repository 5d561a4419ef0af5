#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "cric/errors.hpp"

namespace cric {

struct GdOptions {
  double init_step = 1e-3;    // first line-search trial step
  double grad_tol = 1e-9;     // stop when ||grad||_inf <= grad_tol * max(1, |f0|)
  std::size_t max_iter = 50000;
  double armijo_c = 1e-4;
  bool record_trace = false;  // keep per-iteration objective values
};

struct GdResult {
  std::vector<double> theta;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;       // gradient tolerance reached (vs. cap/stall)
  double grad_norm_inf = 0.0;
  std::vector<double> trace;
};

/// Full-batch steepest descent with backtracking (Armijo) line search.
/// The accepted step seeds the next trial at twice its size, so the search
/// adapts to the local curvature without a schedule. Deterministic: no
/// randomness, fixed evaluation order. Throws NumericError if the objective
/// turns non-finite.
template <typename Value, typename Gradient>
GdResult minimize(Value&& value, Gradient&& gradient, std::vector<double> theta0,
                  const GdOptions& opts) {
  GdResult res;
  res.theta = std::move(theta0);
  const std::size_t dim = res.theta.size();
  std::vector<double> grad(dim), trial(dim);

  double f = value(res.theta);
  if (!std::isfinite(f)) throw NumericError("minimize: objective non-finite at start");
  const double tol = opts.grad_tol * std::max(1.0, std::fabs(f));
  double step = opts.init_step;
  if (opts.record_trace) res.trace.push_back(f);

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    gradient(res.theta, grad);
    double gmax = 0.0, gg = 0.0;
    for (double g : grad) {
      gmax = std::max(gmax, std::fabs(g));
      gg += g * g;
    }
    res.grad_norm_inf = gmax;
    if (!std::isfinite(gg)) throw NumericError("minimize: gradient non-finite");
    if (gmax <= tol) {
      res.converged = true;
      break;
    }

    double t = std::min(2.0 * step, 1e12);
    bool accepted = false;
    for (int back = 0; back < 120; ++back) {
      for (std::size_t j = 0; j < dim; ++j) trial[j] = res.theta[j] - t * grad[j];
      const double ft = value(trial);
      if (std::isfinite(ft) && ft <= f - opts.armijo_c * t * gg) {
        res.theta.swap(trial);
        f = ft;
        step = t;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++res.iterations;
    if (opts.record_trace) res.trace.push_back(f);
    if (!accepted) break;  // no descent at machine-scale steps
  }
  res.value = f;
  if (!std::isfinite(f)) throw NumericError("minimize: objective non-finite");
  return res;
}

}  // namespace cric
