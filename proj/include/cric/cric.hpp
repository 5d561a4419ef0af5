#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cric/dataset.hpp"
#include "cric/predictor.hpp"
#include "cric/ratio.hpp"

namespace cric {

/// One ordered environment pair (e, e'), e != e': the reweighted mean
/// prediction on e' pulled toward e, the plain mean on e, and their squared
/// gap.
struct PairStatistic {
  std::string e, e_prime;
  double q_cross = 0.0;   // weighted mean over the e' sample
  double q_self = 0.0;    // plain mean over the e sample
  double squared_gap = 0.0;
};

struct CricReport {
  std::vector<PairStatistic> pair_stats_phi;       // evaluated predictor
  std::vector<PairStatistic> pair_stats_baseline;  // pooled baseline
  double numerator = 0.0;
  double denominator = 0.0;
  double q_hat = 0.0;
  double log10_q_hat = 0.0;  // -inf when q_hat == 0 (serialized as null)
  bool weight_normalized = false;

  nlohmann::json to_json() const;
};

struct CricOptions {
  /// Rescale each pair's weights to mean exactly 1 over the e' sample before
  /// averaging. Off by default; turning it on buys exact affine invariance
  /// at finite sample size.
  bool weight_normalized = false;
  /// The denominator must exceed threshold_scale * mean(baseline prediction^2)
  /// or the criterion is reported as degenerate.
  double denominator_threshold_scale = 1e-12;
};

/// Reweighted mean prediction of p over the e' sample: with weights
/// w_i = ratio(e, e')(x_i), returns mean(pred_i * w_i) (weights first
/// normalized to mean 1 when requested).
double q_hat_cross(const Predictor& p, const RatioModel& ratio, const std::string& e,
                   const std::string& e_prime, const MultiEnvDataset& data,
                   bool weight_normalized = false);

/// Plain mean prediction of p over environment e.
double q_hat_self(const Predictor& p, const std::string& e, const MultiEnvDataset& data);

/// The invariance criterion: sum of squared q-gaps over all ordered pairs
/// (e != e'; diagonal terms vanish identically and are omitted) for the
/// evaluated predictor, divided by the same sum for the baseline. The same
/// ratio model weights both sums. Throws DataError with fewer than two
/// environments; NumericError when the baseline denominator is degenerate.
/// `baseline` must have kind erm_baseline.
CricReport compute_cric(const Predictor& p, const Predictor& baseline, const RatioModel& ratio,
                const MultiEnvDataset& data, const CricOptions& opts = {});

/// Scalar combination of test error and the criterion: error + theta * q_hat.
double integrated_criterion(double prediction_error, double q_hat, double theta);

}  // namespace cric
