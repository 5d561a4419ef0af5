#include "cric/train.hpp"

#include <cmath>

#include "cric/errors.hpp"
#include "cric/gradient_descent.hpp"
#include "cric/kernels.hpp"

namespace cric {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train config: epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train config: learning_rate must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("train config: lambda must be non-negative");
  }
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("train config: l2 must be non-negative");
  if (!(grad_tol >= 0.0)) throw ConfigError("train config: grad_tol must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lambda", lambda},   {"learning_rate", learning_rate}, {"epochs", epochs},
          {"l2", l2},           {"seed", seed},                   {"grad_tol", grad_tol},
          {"loss", "squared_error"}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("l2")) cfg.l2 = j.at("l2").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("grad_tol")) cfg.grad_tol = j.at("grad_tol").get<double>();
    if (j.contains("loss") && j.at("loss").get<std::string>() != "squared_error") {
      throw ConfigError("train config: only squared_error loss is supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config json: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

double risk(const Predictor& p, const EnvDataset& d) {
  const std::vector<double> pred = p.predict_all(d.covariates);
  return kernels::sq_diff_sum(pred.data(), d.outcomes.data(), pred.size()) /
         static_cast<double>(pred.size());
}

double irmv1_penalty(const Predictor& p, const EnvDataset& d) {
  const std::vector<double> pred = p.predict_all(d.covariates);
  const std::size_t n = pred.size();
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = pred[i] - d.outcomes[i];
  const double g = 2.0 * kernels::dot(pred.data(), resid.data(), n) / static_cast<double>(n);
  return g * g;
}

double vrex_penalty(std::span<const double> risks) {
  if (risks.size() < 2) throw ConfigError("vrex_penalty: need at least 2 environment risks");
  const double n = static_cast<double>(risks.size());
  const double mean = kernels::sum(risks.data(), risks.size()) / n;
  double var = 0.0;
  for (double r : risks) var += (r - mean) * (r - mean);
  return var / n;
}

// ---------------------------------------------------------------------------

PooledMseObjective::PooledMseObjective(const EnvDataset& pooled, double l2)
    : data_(pooled), d_(pooled.covariates.cols()), l2_(l2),
      pred_(pooled.size()), resid_(pooled.size()) {}

double PooledMseObjective::value(const std::vector<double>& theta) const {
  const std::size_t n = data_.size();
  kernels::matvec_rows(data_.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
  const double mse =
      kernels::sq_diff_sum(pred_.data(), data_.outcomes.data(), n) / static_cast<double>(n);
  return mse + l2_ * kernels::sum_sq(theta.data(), d_);
}

void PooledMseObjective::gradient(const std::vector<double>& theta,
                                  std::vector<double>& out) const {
  const std::size_t n = data_.size();
  kernels::matvec_rows(data_.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) resid_[i] = scale * (pred_[i] - data_.outcomes[i]);
  std::fill(out.begin(), out.end(), 0.0);
  kernels::add_weighted_rows(data_.covariates.data(), n, d_, resid_.data(), out.data());
  kernels::axpy(2.0 * l2_, theta.data(), out.data(), d_);
  out[d_] = kernels::sum(resid_.data(), n);
}

Irmv1Objective::Irmv1Objective(const MultiEnvDataset& data, double lambda, double l2)
    : data_(data), d_(data.feature_dim()), lambda_(lambda), l2_(l2) {}

double Irmv1Objective::value(const std::vector<double>& theta) const {
  double total = 0.0;
  for (std::size_t ei = 0; ei < data_.env_count(); ++ei) {
    const EnvDataset& env = data_.env(ei);
    const std::size_t n = env.size();
    pred_.resize(n);
    resid_.resize(n);
    kernels::matvec_rows(env.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
    for (std::size_t i = 0; i < n; ++i) resid_[i] = pred_[i] - env.outcomes[i];
    const double r = kernels::sum_sq(resid_.data(), n) / static_cast<double>(n);
    const double g = 2.0 * kernels::dot(pred_.data(), resid_.data(), n) / static_cast<double>(n);
    total += r + lambda_ * g * g;
  }
  return total + l2_ * kernels::sum_sq(theta.data(), d_);
}

void Irmv1Objective::gradient(const std::vector<double>& theta, std::vector<double>& out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t ei = 0; ei < data_.env_count(); ++ei) {
    const EnvDataset& env = data_.env(ei);
    const std::size_t n = env.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    pred_.resize(n);
    resid_.resize(n);
    comb_.resize(n);
    kernels::matvec_rows(env.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
    for (std::size_t i = 0; i < n; ++i) resid_[i] = pred_[i] - env.outcomes[i];
    const double g = 2.0 * kernels::dot(pred_.data(), resid_.data(), n) * inv_n;
    // dR/dtheta uses resid; d(g)/dtheta uses pred + resid (= 2 pred - y)
    const double a = 2.0 * inv_n;
    const double b = 2.0 * lambda_ * g * 2.0 * inv_n;
    for (std::size_t i = 0; i < n; ++i) comb_[i] = a * resid_[i] + b * (pred_[i] + resid_[i]);
    kernels::add_weighted_rows(env.covariates.data(), n, d_, comb_.data(), out.data());
    out[d_] += kernels::sum(comb_.data(), n);
  }
  kernels::axpy(2.0 * l2_, theta.data(), out.data(), d_);
}

VrexObjective::VrexObjective(const MultiEnvDataset& data, double lambda, double l2)
    : data_(data), d_(data.feature_dim()), lambda_(lambda), l2_(l2) {}

double VrexObjective::value(const std::vector<double>& theta) const {
  const std::size_t k = data_.env_count();
  risks_.resize(k);
  for (std::size_t ei = 0; ei < k; ++ei) {
    const EnvDataset& env = data_.env(ei);
    const std::size_t n = env.size();
    pred_.resize(n);
    kernels::matvec_rows(env.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
    risks_[ei] =
        kernels::sq_diff_sum(pred_.data(), env.outcomes.data(), n) / static_cast<double>(n);
  }
  const double total = kernels::sum(risks_.data(), k);
  const double mean = total / static_cast<double>(k);
  double var = 0.0;
  for (double r : risks_) var += (r - mean) * (r - mean);
  var /= static_cast<double>(k);
  return total + lambda_ * var + l2_ * kernels::sum_sq(theta.data(), d_);
}

void VrexObjective::gradient(const std::vector<double>& theta, std::vector<double>& out) const {
  const std::size_t k = data_.env_count();
  risks_.resize(k);
  for (std::size_t ei = 0; ei < k; ++ei) {
    const EnvDataset& env = data_.env(ei);
    const std::size_t n = env.size();
    pred_.resize(n);
    kernels::matvec_rows(env.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
    risks_[ei] =
        kernels::sq_diff_sum(pred_.data(), env.outcomes.data(), n) / static_cast<double>(n);
  }
  const double mean = kernels::sum(risks_.data(), k) / static_cast<double>(k);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t ei = 0; ei < k; ++ei) {
    const EnvDataset& env = data_.env(ei);
    const std::size_t n = env.size();
    // d(total)/dR^e = 1, d(var)/dR^e = (2/k)(R^e - mean)
    const double weight =
        1.0 + lambda_ * (2.0 / static_cast<double>(k)) * (risks_[ei] - mean);
    const double scale = weight * 2.0 / static_cast<double>(n);
    pred_.resize(n);
    resid_.resize(n);
    kernels::matvec_rows(env.covariates.data(), n, d_, theta.data(), theta[d_], pred_.data());
    for (std::size_t i = 0; i < n; ++i) resid_[i] = scale * (pred_[i] - env.outcomes[i]);
    kernels::add_weighted_rows(env.covariates.data(), n, d_, resid_.data(), out.data());
    out[d_] += kernels::sum(resid_.data(), n);
  }
  kernels::axpy(2.0 * l2_, theta.data(), out.data(), d_);
}

// ---------------------------------------------------------------------------

namespace {

template <typename Objective>
GdResult run_descent(const Objective& obj, const TrainConfig& cfg, std::vector<double> theta0,
                     bool record_trace) {
  GdOptions opts;
  opts.init_step = cfg.learning_rate;
  opts.grad_tol = cfg.grad_tol;
  opts.max_iter = cfg.epochs;
  opts.record_trace = record_trace;
  return minimize([&obj](const std::vector<double>& t) { return obj.value(t); },
                  [&obj](const std::vector<double>& t, std::vector<double>& g) {
                    obj.gradient(t, g);
                  },
                  std::move(theta0), opts);
}

// Penalized trainers start from their own unpenalized solution. Descending
// from zero instead gets trapped next to the origin: for any direction u
// correlated with the outcome, the penalty term grows quadratically along
// f = eps * u with weight lambda, which walls off the risk-minimizing basin
// and leaves a spurious minimizer at |f| = O(1/lambda).
template <typename Objective>
std::vector<double> unpenalized_start(const MultiEnvDataset& data, const TrainConfig& cfg,
                                      double l2) {
  const Objective warm(data, 0.0, l2);
  return run_descent(warm, cfg, std::vector<double>(warm.dim(), 0.0), false).theta;
}

void fill_diagnostics(TrainDiagnostics* diag, const GdResult& res) {
  if (!diag) return;
  diag->objective_trace = res.trace;
  diag->iterations = res.iterations;
  diag->converged = res.converged;
}

std::vector<double> take_coefficients(GdResult& res, std::size_t d) {
  std::vector<double> coef(res.theta.begin(), res.theta.begin() + d);
  return coef;
}

}  // namespace

Predictor train_erm(const MultiEnvDataset& data, const TrainConfig& cfg, TrainDiagnostics* diag) {
  cfg.validate();
  if (data.env_count() < 1) throw DataError("train_erm: need at least one environment");
  const EnvDataset pooled = data.pooled();
  const PooledMseObjective obj(pooled, cfg.l2);
  GdResult res = run_descent(obj, cfg, std::vector<double>(obj.dim(), 0.0), diag != nullptr);
  fill_diagnostics(diag, res);
  const double intercept = res.theta[data.feature_dim()];
  return Predictor::linear(take_coefficients(res, data.feature_dim()), intercept,
                           PredictorKind::erm_baseline);
}

Predictor train_irmv1(const MultiEnvDataset& data, const TrainConfig& cfg,
                      TrainDiagnostics* diag) {
  cfg.validate();
  if (data.env_count() < 2) throw DataError("train_irmv1: need at least two environments");
  std::vector<double> theta0(data.feature_dim() + 1, 0.0);
  if (cfg.lambda > 0.0) theta0 = unpenalized_start<Irmv1Objective>(data, cfg, cfg.l2);
  const Irmv1Objective obj(data, cfg.lambda, cfg.l2);
  GdResult res = run_descent(obj, cfg, std::move(theta0), diag != nullptr);
  fill_diagnostics(diag, res);
  const std::size_t d = data.feature_dim();
  // representation column with the dummy classifier fixed at 1
  Matrix phi(d, 1);
  for (std::size_t j = 0; j < d; ++j) phi(j, 0) = res.theta[j];
  return Predictor::with_phi(std::move(phi), {1.0}, res.theta[d], PredictorKind::irm_style);
}

Predictor train_vrex(const MultiEnvDataset& data, const TrainConfig& cfg,
                     TrainDiagnostics* diag) {
  cfg.validate();
  if (data.env_count() < 2) throw DataError("train_vrex: need at least two environments");
  std::vector<double> theta0(data.feature_dim() + 1, 0.0);
  if (cfg.lambda > 0.0) theta0 = unpenalized_start<VrexObjective>(data, cfg, cfg.l2);
  const VrexObjective obj(data, cfg.lambda, cfg.l2);
  GdResult res = run_descent(obj, cfg, std::move(theta0), diag != nullptr);
  fill_diagnostics(diag, res);
  const double intercept = res.theta[data.feature_dim()];
  return Predictor::linear(take_coefficients(res, data.feature_dim()), intercept,
                           PredictorKind::irm_style);
}

Predictor train_erm(const MultiEnvDataset& data, const TrainConfig& cfg) {
  return train_erm(data, cfg, nullptr);
}
Predictor train_irmv1(const MultiEnvDataset& data, const TrainConfig& cfg) {
  return train_irmv1(data, cfg, nullptr);
}
Predictor train_vrex(const MultiEnvDataset& data, const TrainConfig& cfg) {
  return train_vrex(data, cfg, nullptr);
}

}  // namespace cric
