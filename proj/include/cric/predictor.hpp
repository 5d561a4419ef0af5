#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cric/matrix.hpp"

namespace cric {

enum class PredictorKind { erm_baseline, irm_style };

PredictorKind predictor_kind_from_string(const std::string& name);
std::string to_string(PredictorKind k);

/// Scalar-valued linear scoring function: predict(x) = w . (Phi^T x) + b.
/// Phi is either an explicit d x k representation matrix or the identity
/// marker (then w acts on x directly). Parameters are validated finite.
class Predictor {
 public:
  /// Identity representation: predict(x) = w . x + intercept.
  static Predictor linear(std::vector<double> w, double intercept, PredictorKind kind);

  /// Explicit representation: predict(x) = w . (phi^T x) + intercept.
  static Predictor with_phi(Matrix phi, std::vector<double> w, double intercept,
                            PredictorKind kind);

  double predict(std::span<const double> x) const;
  std::vector<double> predict_all(const Matrix& x) const;

  /// The d-vector c with predict(x) = c . x + intercept (phi * w, or w when
  /// phi is the identity).
  const std::vector<double>& effective_coefficients() const { return effective_; }

  double intercept() const { return intercept_; }
  PredictorKind kind() const { return kind_; }
  bool has_identity_phi() const { return identity_phi_; }
  const Matrix& phi() const { return phi_; }
  const std::vector<double>& w() const { return w_; }
  std::size_t feature_dim() const { return effective_.size(); }

  nlohmann::json to_json() const;
  static Predictor from_json(const nlohmann::json& j);
  static Predictor load(const std::string& path);
  void save(const std::string& path) const;

 private:
  Predictor() = default;
  void finalize();  // computes effective_, validates finiteness

  PredictorKind kind_ = PredictorKind::erm_baseline;
  bool identity_phi_ = true;
  Matrix phi_;               // empty when identity
  std::vector<double> w_;
  double intercept_ = 0.0;
  std::vector<double> effective_;
};

}  // namespace cric
