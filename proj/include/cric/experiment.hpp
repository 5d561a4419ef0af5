#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cric/cric.hpp"
#include "cric/ratio.hpp"
#include "cric/sem.hpp"
#include "cric/train.hpp"

namespace cric {

enum class Method { erm, irmv1, vrex };

Method method_from_string(const std::string& name);
std::string to_string(Method m);

/// Replicated synthetic benchmark: generate train/test data from one
/// structural model per replicate, train the requested methods, fit ratio
/// models per split, and score every method against the pooled baseline.
struct ExperimentConfig {
  SemSetting setting = SemSetting::FOU;
  std::vector<double> env_scales = {0.2, 2.0, 5.0};
  std::size_t n_train = 800;
  std::size_t n_test = 500;
  std::vector<Method> methods = {Method::irmv1, Method::vrex};
  std::size_t replicates = 10;
  std::map<Method, TrainConfig> train_cfg;  // per-method overrides
  RatioMode ratio_mode = RatioMode::classifier;
  double clip_epsilon = 1e-3;
  bool weight_normalized = false;
  std::uint64_t base_seed = 0;

  TrainConfig config_for(Method m) const;
  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ResultRow {
  std::size_t replicate = 0;
  std::string setting;
  std::string method;
  std::string split;  // "train" or "test"
  double q_hat = 0.0;
  double log10_q_hat = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::vector<double> env_risks;  // per environment, dataset order
};

struct QTableEntry {
  std::size_t replicate = 0;
  std::string method;
  std::string split;
  std::string e, e_prime;
  double q_cross = 0.0;
  double q_self = 0.0;
};

struct ExperimentResult {
  std::vector<std::string> env_labels;
  std::vector<ResultRow> rows;      // replicate-major, then method, then split
  std::vector<QTableEntry> q_table;
};

/// Deterministic given the config: replicate seeds are derived from
/// base_seed, structural weights are redrawn per replicate and shared
/// between that replicate's train and test draws, and predictors are never
/// refit on test data (the test split only gets its own ratio model).
/// Training or fitting errors are rethrown annotated with (replicate,
/// method).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Write results.csv, q_table.json and summary.json into out_dir (created
/// if missing). Reruns with the same config are byte-identical.
void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& out_dir);

/// Aggregation used by summary.json: population std; median averages the
/// two middle values for even counts.
struct SummaryStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double median = 0.0;
};
SummaryStats summarize(std::span<const double> values);

}  // namespace cric
