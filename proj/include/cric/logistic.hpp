#pragma once

#include <cstddef>
#include <vector>

#include "cric/matrix.hpp"

namespace cric {

struct LogisticFitConfig {
  double ridge = 1e-4;      // coefficient penalty per sample (mean-loss scale)
  double grad_tol = 1e-6;   // infinity norm of the mean-loss gradient
  // Near-separable pairs need ~kappa * ln(1/tol) ~ 3e4 steps at this ridge
  // (curvature is ridge-bounded), so the cap sits well above that.
  std::size_t max_iter = 100000;
  double init_step = 1.0;
};

struct LogisticModel {
  // weights[0] is the intercept, weights[1..d] the feature coefficients,
  // in the original (unstandardized) coordinates.
  std::vector<double> weights;

  double linear_score(const double* x, std::size_t d) const;
};

/// Fit a binary conditional-probability model p(y=1|x) = sigmoid(b + w.x) by
/// minimizing the ridge-penalized mean negative log-likelihood with
/// backtracking gradient descent. Features are standardized internally for
/// conditioning (the ridge acts on the standardized coefficients); returned
/// weights are mapped back to the original coordinates. Throws NumericError
/// with the final gradient norm if the tolerance is not reached.
LogisticModel fit_logistic(const Matrix& x, const std::vector<double>& y01,
                           const LogisticFitConfig& cfg = {});

}  // namespace cric
