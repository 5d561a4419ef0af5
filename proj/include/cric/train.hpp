#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "cric/dataset.hpp"
#include "cric/predictor.hpp"

namespace cric {

/// Shared trainer configuration (squared-error loss throughout).
struct TrainConfig {
  double lambda = 1e4;          // penalty weight; ignored by train_erm
  double learning_rate = 1e-3;  // initial line-search step
  std::size_t epochs = 50000;   // iteration cap
  double l2 = 0.0;              // ridge on the effective coefficients
  std::uint64_t seed = 0;
  double grad_tol = 1e-9;       // relative gradient stopping tolerance

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Mean squared error of the predictor on one environment.
double risk(const Predictor& p, const EnvDataset& d);

/// Squared derivative of the per-environment risk in a scalar dummy
/// multiplier at 1: g = (2/n) sum f(x_i)(f(x_i) - y_i), returns g^2.
double irmv1_penalty(const Predictor& p, const EnvDataset& d);

/// Population variance of per-environment risks; requires >= 2 entries.
double vrex_penalty(std::span<const double> risks);

/// Pooled ridge regression by full-batch gradient descent with backtracking
/// line search; returns an identity-representation predictor.
Predictor train_erm(const MultiEnvDataset& data, const TrainConfig& cfg);

/// Minimizes sum_e [R^e + lambda * g_e^2] over a linear representation with
/// the dummy classifier fixed at 1 (the intercept trains as part of the
/// representation output).
Predictor train_irmv1(const MultiEnvDataset& data, const TrainConfig& cfg);

/// Minimizes sum_e R^e + lambda * Var_e(R^e) over a linear predictor.
Predictor train_vrex(const MultiEnvDataset& data, const TrainConfig& cfg);

/// Objective/gradient pairs backing the trainers, exposed so tests can check
/// the analytic gradients against finite differences. theta layout:
/// [coefficients(d), intercept].
class PooledMseObjective {
 public:
  PooledMseObjective(const EnvDataset& pooled, double l2);
  std::size_t dim() const { return d_ + 1; }
  double value(const std::vector<double>& theta) const;
  void gradient(const std::vector<double>& theta, std::vector<double>& out) const;

 private:
  const EnvDataset& data_;
  std::size_t d_;
  double l2_;
  mutable std::vector<double> pred_, resid_;
};

class Irmv1Objective {
 public:
  Irmv1Objective(const MultiEnvDataset& data, double lambda, double l2);
  std::size_t dim() const { return d_ + 1; }
  double value(const std::vector<double>& theta) const;
  void gradient(const std::vector<double>& theta, std::vector<double>& out) const;

 private:
  const MultiEnvDataset& data_;
  std::size_t d_;
  double lambda_, l2_;
  mutable std::vector<double> pred_, resid_, comb_;
};

class VrexObjective {
 public:
  VrexObjective(const MultiEnvDataset& data, double lambda, double l2);
  std::size_t dim() const { return d_ + 1; }
  double value(const std::vector<double>& theta) const;
  void gradient(const std::vector<double>& theta, std::vector<double>& out) const;

 private:
  const MultiEnvDataset& data_;
  std::size_t d_;
  double lambda_, l2_;
  mutable std::vector<double> pred_, resid_, risks_;
};

/// Objective values along the accepted iterates of the last call (used by
/// tests to confirm the descent property).
struct TrainDiagnostics {
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

Predictor train_erm(const MultiEnvDataset& data, const TrainConfig& cfg,
                    TrainDiagnostics* diag);
Predictor train_irmv1(const MultiEnvDataset& data, const TrainConfig& cfg,
                      TrainDiagnostics* diag);
Predictor train_vrex(const MultiEnvDataset& data, const TrainConfig& cfg,
                     TrainDiagnostics* diag);

}  // namespace cric
