#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cric/matrix.hpp"

namespace cric {

/// Covariate/outcome sample from one environment. Rows of `covariates` pair
/// with entries of `outcomes`; at least two rows, all values finite.
struct EnvDataset {
  Matrix covariates;
  std::vector<double> outcomes;

  std::size_t size() const { return outcomes.size(); }

  /// Throws DataError if the invariants above do not hold.
  void validate() const;
};

/// Environment-keyed dataset. Environments keep their insertion order, which
/// fixes the iteration order everywhere downstream (pair enumeration, seed
/// derivation, report rows).
class MultiEnvDataset {
 public:
  explicit MultiEnvDataset(std::size_t feature_dim) : feature_dim_(feature_dim) {}

  void add_environment(std::string label, EnvDataset env);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t env_count() const { return labels_.size(); }
  std::size_t total_rows() const;

  const std::vector<std::string>& labels() const { return labels_; }
  bool has_env(const std::string& label) const;

  /// Throws DataError for unknown labels/indices.
  const EnvDataset& env(const std::string& label) const;
  const EnvDataset& env(std::size_t index) const;
  std::size_t env_index(const std::string& label) const;

  /// All environments concatenated in order (the pooled training view).
  EnvDataset pooled() const;

 private:
  std::size_t feature_dim_;
  std::vector<std::string> labels_;
  std::vector<EnvDataset> envs_;
};

/// Disjoint per-environment row split, shuffled by a seed-derived stream per
/// environment. Sizes are floor(n_e * train_fraction) and the remainder;
/// throws DataError if either side of any environment drops below 2 rows.
std::pair<MultiEnvDataset, MultiEnvDataset> split_per_env(const MultiEnvDataset& data,
                                                          double train_fraction,
                                                          std::uint64_t seed);

}  // namespace cric
