#include "cric/cric.hpp"

#include <cmath>

#include "cric/errors.hpp"
#include "cric/kernels.hpp"

namespace cric {

namespace {

double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  return kernels::dot(values.data(), weights.data(), values.size()) /
         static_cast<double>(values.size());
}

void normalize_to_unit_mean(std::vector<double>& weights) {
  const double mean = kernels::sum(weights.data(), weights.size()) /
                      static_cast<double>(weights.size());
  kernels::scal(1.0 / mean, weights.data(), weights.size());
}

}  // namespace

double q_hat_cross(const Predictor& p, const RatioModel& ratio, const std::string& e,
                   const std::string& e_prime, const MultiEnvDataset& data,
                   bool weight_normalized) {
  const EnvDataset& env = data.env(e_prime);
  data.env_index(e);  // validate the target environment too
  std::vector<double> weights = ratio.weights_for(e, e_prime, env.covariates);
  if (weight_normalized) normalize_to_unit_mean(weights);
  return weighted_mean(p.predict_all(env.covariates), weights);
}

double q_hat_self(const Predictor& p, const std::string& e, const MultiEnvDataset& data) {
  const EnvDataset& env = data.env(e);
  const std::vector<double> pred = p.predict_all(env.covariates);
  return kernels::sum(pred.data(), pred.size()) / static_cast<double>(pred.size());
}

CricReport compute_cric(const Predictor& p, const Predictor& baseline, const RatioModel& ratio,
                const MultiEnvDataset& data, const CricOptions& opts) {
  if (data.env_count() < 2) {
    throw DataError("cric: need at least two environments");
  }
  if (baseline.kind() != PredictorKind::erm_baseline) {
    throw ConfigError("cric: baseline predictor must have kind erm_baseline");
  }

  const std::size_t k = data.env_count();
  std::vector<std::vector<double>> pred_p(k), pred_b(k);
  std::vector<double> self_p(k), self_b(k);
  double baseline_sq_sum = 0.0;
  std::size_t total_rows = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const EnvDataset& env = data.env(i);
    pred_p[i] = p.predict_all(env.covariates);
    pred_b[i] = baseline.predict_all(env.covariates);
    const double n = static_cast<double>(env.size());
    self_p[i] = kernels::sum(pred_p[i].data(), env.size()) / n;
    self_b[i] = kernels::sum(pred_b[i].data(), env.size()) / n;
    baseline_sq_sum += kernels::sum_sq(pred_b[i].data(), env.size());
    total_rows += env.size();
  }

  CricReport report;
  report.weight_normalized = opts.weight_normalized;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      std::vector<double> weights =
          ratio.weights_for(data.labels()[i], data.labels()[j], data.env(j).covariates);
      if (opts.weight_normalized) normalize_to_unit_mean(weights);

      PairStatistic sp;
      sp.e = data.labels()[i];
      sp.e_prime = data.labels()[j];
      sp.q_cross = weighted_mean(pred_p[j], weights);
      sp.q_self = self_p[i];
      sp.squared_gap = (sp.q_cross - sp.q_self) * (sp.q_cross - sp.q_self);
      report.numerator += sp.squared_gap;
      report.pair_stats_phi.push_back(std::move(sp));

      PairStatistic sb;
      sb.e = data.labels()[i];
      sb.e_prime = data.labels()[j];
      sb.q_cross = weighted_mean(pred_b[j], weights);
      sb.q_self = self_b[i];
      sb.squared_gap = (sb.q_cross - sb.q_self) * (sb.q_cross - sb.q_self);
      report.denominator += sb.squared_gap;
      report.pair_stats_baseline.push_back(std::move(sb));
    }
  }

  const double scale = baseline_sq_sum / static_cast<double>(total_rows);
  const double threshold = opts.denominator_threshold_scale * scale;
  if (!(report.denominator > threshold)) {
    throw NumericError(
        "cric: degenerate baseline denominator (environments are indistinguishable "
        "under the baseline; the criterion is undefined)");
  }
  report.q_hat = report.numerator / report.denominator;
  report.log10_q_hat = std::log10(report.q_hat);
  return report;
}

double integrated_criterion(double prediction_error, double q_hat, double theta) {
  return prediction_error + theta * q_hat;
}

namespace {

nlohmann::json pair_stats_to_json(const std::vector<PairStatistic>& stats) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : stats) {
    arr.push_back({{"e", s.e},
                   {"e_prime", s.e_prime},
                   {"q_cross", s.q_cross},
                   {"q_self", s.q_self},
                   {"squared_gap", s.squared_gap}});
  }
  return arr;
}

}  // namespace

nlohmann::json CricReport::to_json() const {
  nlohmann::json j;
  j["numerator"] = numerator;
  j["denominator"] = denominator;
  j["q_hat"] = q_hat;
  if (std::isfinite(log10_q_hat)) {
    j["log10_q_hat"] = log10_q_hat;
  } else {
    j["log10_q_hat"] = nullptr;
  }
  j["weight_normalized"] = weight_normalized;
  j["pairs_phi"] = pair_stats_to_json(pair_stats_phi);
  j["pairs_baseline"] = pair_stats_to_json(pair_stats_baseline);
  return j;
}

}  // namespace cric
