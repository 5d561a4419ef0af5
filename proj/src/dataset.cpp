#include "cric/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cric/errors.hpp"
#include "cric/rng.hpp"

namespace cric {

void EnvDataset::validate() const {
  if (covariates.rows() != outcomes.size()) {
    throw DataError("environment dataset: covariate row count does not match outcome length");
  }
  if (outcomes.size() < 2) {
    throw DataError("environment dataset: need at least 2 samples per environment");
  }
  for (double v : outcomes) {
    if (!std::isfinite(v)) throw DataError("environment dataset: non-finite outcome value");
  }
  const double* p = covariates.data();
  const std::size_t total = covariates.rows() * covariates.cols();
  for (std::size_t i = 0; i < total; ++i) {
    if (!std::isfinite(p[i])) throw DataError("environment dataset: non-finite covariate value");
  }
}

void MultiEnvDataset::add_environment(std::string label, EnvDataset env) {
  if (label.empty()) throw DataError("environment label must be non-empty");
  if (has_env(label)) throw DataError("duplicate environment label '" + label + "'");
  if (env.covariates.cols() != feature_dim_) {
    throw DataError("environment '" + label + "' has " + std::to_string(env.covariates.cols()) +
                    " feature columns, expected " + std::to_string(feature_dim_));
  }
  env.validate();
  labels_.push_back(std::move(label));
  envs_.push_back(std::move(env));
}

std::size_t MultiEnvDataset::total_rows() const {
  std::size_t n = 0;
  for (const auto& e : envs_) n += e.size();
  return n;
}

bool MultiEnvDataset::has_env(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t MultiEnvDataset::env_index(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DataError("unknown environment '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

const EnvDataset& MultiEnvDataset::env(const std::string& label) const {
  return envs_[env_index(label)];
}

const EnvDataset& MultiEnvDataset::env(std::size_t index) const {
  if (index >= envs_.size()) throw DataError("environment index out of range");
  return envs_[index];
}

EnvDataset MultiEnvDataset::pooled() const {
  EnvDataset out;
  out.covariates = Matrix(total_rows(), feature_dim_);
  out.outcomes.reserve(total_rows());
  std::size_t row = 0;
  for (const auto& e : envs_) {
    for (std::size_t i = 0; i < e.size(); ++i, ++row) {
      std::copy_n(e.covariates.row(i), feature_dim_, out.covariates.row(row));
      out.outcomes.push_back(e.outcomes[i]);
    }
  }
  return out;
}

std::pair<MultiEnvDataset, MultiEnvDataset> split_per_env(const MultiEnvDataset& data,
                                                          double train_fraction,
                                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  }
  MultiEnvDataset train(data.feature_dim());
  MultiEnvDataset test(data.feature_dim());
  for (std::size_t ei = 0; ei < data.env_count(); ++ei) {
    const EnvDataset& env = data.env(ei);
    const std::size_t n = env.size();
    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * train_fraction));
    const std::size_t n_test = n - n_train;
    if (n_train < 2 || n_test < 2) {
      throw DataError("split would leave environment '" + data.labels()[ei] +
                      "' with fewer than 2 samples on one side (" +
                      std::to_string(n_train) + "/" + std::to_string(n_test) + ")");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(seed, {stream_tag::split, ei});
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
      std::swap(order[i], order[j]);
    }

    const auto take = [&](std::size_t begin, std::size_t count) {
      EnvDataset part;
      part.covariates = Matrix(count, data.feature_dim());
      part.outcomes.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t src = order[begin + k];
        std::copy_n(env.covariates.row(src), data.feature_dim(), part.covariates.row(k));
        part.outcomes.push_back(env.outcomes[src]);
      }
      return part;
    };
    train.add_environment(data.labels()[ei], take(0, n_train));
    test.add_environment(data.labels()[ei], take(n_train, n_test));
  }
  return {std::move(train), std::move(test)};
}

}  // namespace cric
