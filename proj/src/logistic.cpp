#include "cric/logistic.hpp"

#include <cmath>
#include <string>

#include "cric/errors.hpp"
#include "cric/gradient_descent.hpp"
#include "cric/kernels.hpp"

namespace cric {

namespace {

double softplus(double z) {
  // log(1 + exp(z)) without overflow
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

double LogisticModel::linear_score(const double* x, std::size_t d) const {
  return weights[0] + kernels::dot(weights.data() + 1, x, d);
}

LogisticModel fit_logistic(const Matrix& x, const std::vector<double>& y01,
                           const LogisticFitConfig& cfg) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n != y01.size() || n < 2) throw DataError("fit_logistic: bad sample shape");
  if (!(cfg.ridge >= 0.0)) throw ConfigError("fit_logistic: ridge must be >= 0");

  // Standardize columns (population moments); constant columns keep scale 1.
  std::vector<double> mean(d, 0.0), inv_sd(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, j);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = x(i, j) - m;
      v += c * c;
    }
    v /= static_cast<double>(n);
    mean[j] = m;
    inv_sd[j] = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
  }
  Matrix xs(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) xs(i, j) = (x(i, j) - mean[j]) * inv_sd[j];
  }

  // theta = [intercept, coefficients...] on standardized features.
  // Objective: mean negative log-likelihood + (ridge/2)||coefficients||^2.
  // The initial value is log 2 < 1, so minimize()'s scaled stopping rule is
  // exactly the absolute tolerance required here.
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> z(n), p(n);

  const auto value = [&](const std::vector<double>& theta) {
    kernels::matvec_rows(xs.data(), n, d, theta.data() + 1, theta[0], z.data());
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) nll += softplus(z[i]) - y01[i] * z[i];
    return nll * inv_n + 0.5 * cfg.ridge * kernels::sum_sq(theta.data() + 1, d);
  };
  const auto grad = [&](const std::vector<double>& theta, std::vector<double>& out) {
    kernels::matvec_rows(xs.data(), n, d, theta.data() + 1, theta[0], z.data());
    for (std::size_t i = 0; i < n; ++i) p[i] = (sigmoid(z[i]) - y01[i]) * inv_n;
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = kernels::sum(p.data(), n);
    kernels::add_weighted_rows(xs.data(), n, d, p.data(), out.data() + 1);
    kernels::axpy(cfg.ridge, theta.data() + 1, out.data() + 1, d);
  };

  GdOptions opts;
  opts.init_step = cfg.init_step;
  opts.max_iter = cfg.max_iter;
  opts.grad_tol = cfg.grad_tol;
  GdResult res = minimize(value, grad, std::vector<double>(d + 1, 0.0), opts);
  // A line-search stall at machine scale with a near-tolerance gradient still
  // counts; anything worse is a genuine failure.
  if (!res.converged && res.grad_norm_inf > 10.0 * cfg.grad_tol) {
    throw NumericError("fit_logistic: no convergence within " + std::to_string(cfg.max_iter) +
                       " iterations (||grad||_inf = " + std::to_string(res.grad_norm_inf) + ")");
  }

  // Map back to original coordinates.
  LogisticModel model;
  model.weights.assign(d + 1, 0.0);
  double intercept = res.theta[0];
  for (std::size_t j = 0; j < d; ++j) {
    const double c = res.theta[j + 1] * inv_sd[j];
    model.weights[j + 1] = c;
    intercept -= c * mean[j];
  }
  model.weights[0] = intercept;
  return model;
}

}  // namespace cric
