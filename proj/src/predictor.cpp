#include "cric/predictor.hpp"

#include <cmath>
#include <fstream>

#include "cric/errors.hpp"
#include "cric/kernels.hpp"

namespace cric {

PredictorKind predictor_kind_from_string(const std::string& name) {
  if (name == "erm_baseline") return PredictorKind::erm_baseline;
  if (name == "irm_style") return PredictorKind::irm_style;
  throw ConfigError("unknown predictor kind '" + name + "'");
}

std::string to_string(PredictorKind k) {
  return k == PredictorKind::erm_baseline ? "erm_baseline" : "irm_style";
}

Predictor Predictor::linear(std::vector<double> w, double intercept, PredictorKind kind) {
  Predictor p;
  p.kind_ = kind;
  p.identity_phi_ = true;
  p.w_ = std::move(w);
  p.intercept_ = intercept;
  p.finalize();
  return p;
}

Predictor Predictor::with_phi(Matrix phi, std::vector<double> w, double intercept,
                              PredictorKind kind) {
  if (phi.cols() != w.size()) {
    throw ConfigError("predictor: phi column count must match classifier length");
  }
  Predictor p;
  p.kind_ = kind;
  p.identity_phi_ = false;
  p.phi_ = std::move(phi);
  p.w_ = std::move(w);
  p.intercept_ = intercept;
  p.finalize();
  return p;
}

void Predictor::finalize() {
  if (identity_phi_) {
    effective_ = w_;
  } else {
    effective_.assign(phi_.rows(), 0.0);
    for (std::size_t j = 0; j < phi_.rows(); ++j) {
      effective_[j] = kernels::dot(phi_.row(j), w_.data(), w_.size());
    }
  }
  if (!std::isfinite(intercept_)) throw ConfigError("predictor: non-finite intercept");
  for (double v : effective_) {
    if (!std::isfinite(v)) throw ConfigError("predictor: non-finite parameters");
  }
}

double Predictor::predict(std::span<const double> x) const {
  return kernels::dot(effective_.data(), x.data(), x.size()) + intercept_;
}

std::vector<double> Predictor::predict_all(const Matrix& x) const {
  std::vector<double> out(x.rows());
  kernels::matvec_rows(x.data(), x.rows(), x.cols(), effective_.data(), intercept_, out.data());
  return out;
}

nlohmann::json Predictor::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["intercept"] = intercept_;
  j["w"] = w_;
  if (identity_phi_) {
    j["phi"] = "identity";
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < phi_.rows(); ++r) {
      rows.push_back(std::vector<double>(phi_.row(r), phi_.row(r) + phi_.cols()));
    }
    j["phi"] = std::move(rows);
  }
  return j;
}

Predictor Predictor::from_json(const nlohmann::json& j) {
  try {
    const auto kind = predictor_kind_from_string(j.at("kind").get<std::string>());
    const double intercept = j.at("intercept").get<double>();
    auto w = j.at("w").get<std::vector<double>>();
    const auto& phi = j.at("phi");
    if (phi.is_string() && phi.get<std::string>() == "identity") {
      return linear(std::move(w), intercept, kind);
    }
    if (!phi.is_array() || phi.empty()) throw DataError("predictor json: bad phi");
    Matrix m(phi.size(), phi.at(0).size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto& row = phi.at(r);
      if (row.size() != m.cols()) throw DataError("predictor json: ragged phi");
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = row.at(c).get<double>();
    }
    return with_phi(std::move(m), std::move(w), intercept, kind);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("predictor json: ") + e.what());
  }
}

Predictor Predictor::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("predictor: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("predictor: invalid json in '" + path + "': " + e.what());
  }
  return from_json(j);
}

void Predictor::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("predictor: cannot write '" + path + "'");
  out << to_json().dump(2) << '\n';
  if (!out) throw DataError("predictor: write failed for '" + path + "'");
}

}  // namespace cric
