#include "cric/sem.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "cric/errors.hpp"
#include "cric/kernels.hpp"
#include "cric/rng.hpp"

namespace cric {

SemSetting sem_setting_from_string(const std::string& name) {
  if (name == "POU") return SemSetting::POU;
  if (name == "PEU") return SemSetting::PEU;
  if (name == "FOU") return SemSetting::FOU;
  if (name == "FEU") return SemSetting::FEU;
  throw ConfigError("unknown SEM setting '" + name + "' (expected POU, PEU, FOU or FEU)");
}

std::string to_string(SemSetting s) {
  switch (s) {
    case SemSetting::POU: return "POU";
    case SemSetting::PEU: return "PEU";
    case SemSetting::FOU: return "FOU";
    case SemSetting::FEU: return "FEU";
  }
  return "?";
}

namespace {

bool partially_observed(SemSetting s) {
  return s == SemSetting::POU || s == SemSetting::PEU;
}

bool heteroskedastic_y(SemSetting s) {
  return s == SemSetting::PEU || s == SemSetting::FEU;
}

bool all_zero(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] != 0.0) return false;
  }
  return true;
}

}  // namespace

void SemConfig::validate() const {
  if (env_scales.empty()) throw ConfigError("sem config: env_scales must be non-empty");
  std::set<double> seen;
  for (double e : env_scales) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw ConfigError("sem config: env_scales must be positive and finite");
    }
    if (!seen.insert(e).second) throw ConfigError("sem config: duplicate environment scale");
  }
  if (dim_x1 == 0 || dim_x2 == 0) throw ConfigError("sem config: dimensions must be positive");
  if (w_h_to_1.rows() != dim_x1 || w_h_to_1.cols() != dim_x1) {
    throw ConfigError("sem config: w_h_to_1 must be dim_x1 x dim_x1");
  }
  if (w_h_to_y.size() != dim_x1) throw ConfigError("sem config: w_h_to_y must have length dim_x1");
  if (w_y_to_2.size() != dim_x2) throw ConfigError("sem config: w_y_to_2 must have length dim_x2");
  if (w_1_to_y.size() != dim_x1) throw ConfigError("sem config: w_1_to_y must have length dim_x1");
  if (!partially_observed(setting)) {
    if (!all_zero(w_h_to_1.data(), dim_x1 * dim_x1) || !all_zero(w_h_to_y.data(), dim_x1) ||
        !all_zero(w_y_to_2.data(), dim_x2)) {
      throw ConfigError("sem config: F settings require zero structural weights");
    }
  }
  if (n_total < 2 * env_scales.size()) {
    throw ConfigError("sem config: n_total must provide at least 2 samples per environment");
  }
}

SemConfig make_sem_config(SemSetting setting, std::vector<double> env_scales,
                          std::size_t n_total, std::uint64_t param_seed,
                          std::size_t dim_x1, std::size_t dim_x2) {
  SemConfig cfg;
  cfg.setting = setting;
  cfg.env_scales = std::move(env_scales);
  cfg.dim_x1 = dim_x1;
  cfg.dim_x2 = dim_x2;
  cfg.n_total = n_total;
  cfg.seed = param_seed;
  cfg.w_h_to_1 = Matrix(dim_x1, dim_x1);
  cfg.w_h_to_y.assign(dim_x1, 0.0);
  cfg.w_y_to_2.assign(dim_x2, 0.0);
  cfg.w_1_to_y.assign(dim_x1, 1.0);
  if (partially_observed(setting)) {
    // Draw order is part of the reproducibility contract: w_h_to_1 row-major,
    // then w_h_to_y, then w_y_to_2.
    Rng rng = Rng::derive(param_seed, {stream_tag::sem_params});
    for (std::size_t i = 0; i < dim_x1 * dim_x1; ++i) cfg.w_h_to_1.data()[i] = rng.next_gaussian();
    for (auto& v : cfg.w_h_to_y) v = rng.next_gaussian();
    for (auto& v : cfg.w_y_to_2) v = rng.next_gaussian();
  }
  cfg.validate();
  return cfg;
}

std::string sem_env_label(double scale) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", scale);
  return buf;
}

MultiEnvDataset generate_sem(const SemConfig& config) {
  config.validate();
  const std::size_t k = config.env_scales.size();
  const std::size_t base = config.n_total / k;
  const std::size_t extra = config.n_total % k;
  const std::size_t d1 = config.dim_x1;
  const std::size_t d2 = config.dim_x2;

  MultiEnvDataset data(config.feature_dim());
  std::vector<double> h(d1);
  for (std::size_t ei = 0; ei < k; ++ei) {
    const double e = config.env_scales[ei];
    const std::size_t n = base + (ei < extra ? 1 : 0);
    const double sigma_y = heteroskedastic_y(config.setting) ? 1.0 : e;
    const double sigma_2 = heteroskedastic_y(config.setting) ? e : 1.0;

    Rng rng_h = Rng::derive(config.seed, {stream_tag::sem_h, ei});
    Rng rng_x1 = Rng::derive(config.seed, {stream_tag::sem_x1, ei});
    Rng rng_y = Rng::derive(config.seed, {stream_tag::sem_y, ei});
    Rng rng_x2 = Rng::derive(config.seed, {stream_tag::sem_x2, ei});

    EnvDataset env;
    env.covariates = Matrix(n, config.feature_dim());
    env.outcomes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double* x1 = env.covariates.row(i);
      double* x2 = x1 + d1;
      for (std::size_t j = 0; j < d1; ++j) h[j] = e * rng_h.next_gaussian();
      for (std::size_t j = 0; j < d1; ++j) {
        x1[j] = kernels::dot(config.w_h_to_1.row(j), h.data(), d1) + e * rng_x1.next_gaussian();
      }
      const double y = kernels::dot(config.w_1_to_y.data(), x1, d1) +
                       kernels::dot(config.w_h_to_y.data(), h.data(), d1) +
                       sigma_y * rng_y.next_gaussian();
      for (std::size_t j = 0; j < d2; ++j) {
        x2[j] = config.w_y_to_2[j] * y + sigma_2 * rng_x2.next_gaussian();
      }
      env.outcomes[i] = y;
    }
    data.add_environment(sem_env_label(e), std::move(env));
  }
  return data;
}

}  // namespace cric
