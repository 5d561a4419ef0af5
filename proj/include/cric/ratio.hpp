#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cric/dataset.hpp"
#include "cric/logistic.hpp"
#include "cric/matrix.hpp"

namespace cric {

enum class RatioMode { classifier, exact_gaussian };

RatioMode ratio_mode_from_string(const std::string& name);
std::string to_string(RatioMode m);

/// Binary conditional-probability model for one unordered environment pair.
/// `weights` ([intercept, coefficients...]) scores Pr(E = e1 | X = x); both
/// ordered directions are served by the same fit, with the probability
/// flipped and the counts swapped for (e2, e1).
struct PairClassifier {
  std::string e1, e2;
  std::vector<double> weights;
  std::size_t n1 = 0, n2 = 0;
  double clip_epsilon = 1e-3;

  /// Clipped to [clip_epsilon, 1 - clip_epsilon].
  double prob_e1(std::span<const double> x) const;
  /// n2 * p / (n1 * (1 - p)) with p = prob_e1(x).
  double ratio_e1_over_e2(std::span<const double> x) const;
};

/// Gaussian density parameters for one environment (exact-ratio mode).
struct GaussianParams {
  std::vector<double> mean;
  Matrix cov;
};

/// Density ratio of two Gaussian laws at x, evaluated in log space.
double exact_gaussian_ratio(const GaussianParams& p1, const GaussianParams& p2,
                            std::span<const double> x);

struct RatioConfig {
  RatioMode mode = RatioMode::classifier;
  double clip_epsilon = 1e-3;
  LogisticFitConfig fit;

  void validate() const;  // throws ConfigError
};

/// Likelihood-ratio model over every ordered environment pair of a dataset.
/// Evaluations are strictly positive and finite: classifier probabilities
/// are clipped before the ratio formula; Gaussian ratios come from log
/// densities of positive-definite covariances.
class RatioModel {
 public:
  /// Fit one pair classifier per unordered pair (classifier mode) or one
  /// mean/covariance estimate per environment (exact_gaussian mode, sample
  /// covariance with n-1 divisor).
  static RatioModel fit(const MultiEnvDataset& data, const RatioConfig& cfg = {});

  /// Exact-Gaussian model from externally supplied per-environment laws.
  static RatioModel from_gaussians(std::vector<std::string> labels,
                                   std::vector<GaussianParams> params);

  RatioMode mode() const { return mode_; }
  double clip_epsilon() const { return clip_epsilon_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t sample_count(const std::string& label) const;

  /// dP^e / dP^{e'} evaluated at x; exactly 1 when e == e_prime.
  double ratio_at(const std::string& e, const std::string& e_prime,
                  std::span<const double> x) const;

  /// Batch evaluation over the rows of x.
  std::vector<double> weights_for(const std::string& e, const std::string& e_prime,
                                  const Matrix& x) const;

  const PairClassifier& pair_classifier(const std::string& e, const std::string& e_prime) const;

  nlohmann::json to_json() const;
  static RatioModel from_json(const nlohmann::json& j);

 private:
  RatioModel() = default;

  struct GaussianEnv {
    GaussianParams params;
    Matrix chol;
    double logdet = 0.0;
  };
  double log_density(const GaussianEnv& g, std::span<const double> x) const;
  std::size_t index_of(const std::string& label) const;

  RatioMode mode_ = RatioMode::classifier;
  double clip_epsilon_ = 1e-3;
  std::vector<std::string> labels_;
  std::vector<std::size_t> counts_;
  // classifier mode: upper-triangular pair storage, entry (i, j) with i < j
  std::vector<PairClassifier> pairs_;
  std::vector<GaussianEnv> gaussians_;
};

/// Per-ordered-pair weight diagnostics over the e' sample: the mean weight
/// (population value 1), the weight range, and the effective sample size
/// (sum w)^2 / (sum w^2).
struct PairDiagnostics {
  std::string e, e_prime;
  std::size_t n = 0;
  double mean_weight = 0.0;
  double min_weight = 0.0;
  double max_weight = 0.0;
  double effective_sample_size = 0.0;
};

std::vector<PairDiagnostics> ratio_diagnostics(const RatioModel& model,
                                               const MultiEnvDataset& data);

nlohmann::json diagnostics_to_json(const std::vector<PairDiagnostics>& diags);

}  // namespace cric
