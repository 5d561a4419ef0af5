#include "cric/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cric/errors.hpp"
#include "cric/kernels.hpp"
#include "cric/linalg.hpp"

namespace cric {

RatioMode ratio_mode_from_string(const std::string& name) {
  if (name == "classifier") return RatioMode::classifier;
  if (name == "exact-gaussian" || name == "exact_gaussian") return RatioMode::exact_gaussian;
  throw ConfigError("unknown ratio mode '" + name + "' (expected classifier or exact-gaussian)");
}

std::string to_string(RatioMode m) {
  return m == RatioMode::classifier ? "classifier" : "exact_gaussian";
}

void RatioConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
    throw ConfigError("ratio config: clip_epsilon must lie in (0, 0.5)");
  }
}

namespace {

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

double PairClassifier::prob_e1(std::span<const double> x) const {
  const double z = weights[0] + kernels::dot(weights.data() + 1, x.data(), x.size());
  return std::clamp(sigmoid(z), clip_epsilon, 1.0 - clip_epsilon);
}

double PairClassifier::ratio_e1_over_e2(std::span<const double> x) const {
  const double p = prob_e1(x);
  return (static_cast<double>(n2) * p) / (static_cast<double>(n1) * (1.0 - p));
}

double exact_gaussian_ratio(const GaussianParams& p1, const GaussianParams& p2,
                            std::span<const double> x) {
  const auto log_density = [&](const GaussianParams& g) {
    const std::size_t d = g.mean.size();
    const Matrix l = cholesky(g.cov);
    std::vector<double> centered(d);
    for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - g.mean[j];
    const std::vector<double> solved = cholesky_solve(l, centered);
    const double quad = kernels::dot(centered.data(), solved.data(), d);
    return -0.5 * (quad + cholesky_logdet(l) +
                   static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
  };
  return std::exp(log_density(p1) - log_density(p2));
}

RatioModel RatioModel::fit(const MultiEnvDataset& data, const RatioConfig& cfg) {
  cfg.validate();
  RatioModel model;
  model.mode_ = cfg.mode;
  model.clip_epsilon_ = cfg.clip_epsilon;
  model.labels_ = data.labels();
  model.counts_.resize(data.env_count());
  for (std::size_t i = 0; i < data.env_count(); ++i) model.counts_[i] = data.env(i).size();

  const std::size_t d = data.feature_dim();
  const std::size_t k = data.env_count();

  if (cfg.mode == RatioMode::classifier) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const EnvDataset& a = data.env(i);
        const EnvDataset& b = data.env(j);
        Matrix x(a.size() + b.size(), d);
        std::vector<double> y(a.size() + b.size(), 0.0);
        for (std::size_t r = 0; r < a.size(); ++r) {
          std::copy_n(a.covariates.row(r), d, x.row(r));
          y[r] = 1.0;
        }
        for (std::size_t r = 0; r < b.size(); ++r) {
          std::copy_n(b.covariates.row(r), d, x.row(a.size() + r));
        }
        PairClassifier pc;
        pc.e1 = model.labels_[i];
        pc.e2 = model.labels_[j];
        pc.n1 = a.size();
        pc.n2 = b.size();
        pc.clip_epsilon = cfg.clip_epsilon;
        pc.weights = fit_logistic(x, y, cfg.fit).weights;
        model.pairs_.push_back(std::move(pc));
      }
    }
    return model;
  }

  for (std::size_t i = 0; i < k; ++i) {
    const EnvDataset& env = data.env(i);
    const std::size_t n = env.size();
    GaussianParams p;
    p.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      kernels::axpy(1.0, env.covariates.row(r), p.mean.data(), d);
    }
    kernels::scal(1.0 / static_cast<double>(n), p.mean.data(), d);
    p.cov = Matrix(d, d);
    std::vector<double> c(d);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < d; ++j) c[j] = env.covariates(r, j) - p.mean[j];
      for (std::size_t j = 0; j < d; ++j) {
        kernels::axpy(c[j], c.data(), p.cov.row(j), d);
      }
    }
    kernels::scal(1.0 / static_cast<double>(n - 1), p.cov.data(), d * d);
    GaussianEnv g;
    g.chol = cholesky(p.cov);
    g.logdet = cholesky_logdet(g.chol);
    g.params = std::move(p);
    model.gaussians_.push_back(std::move(g));
  }
  return model;
}

RatioModel RatioModel::from_gaussians(std::vector<std::string> labels,
                                      std::vector<GaussianParams> params) {
  if (labels.size() != params.size() || labels.empty()) {
    throw ConfigError("from_gaussians: one parameter set per label required");
  }
  RatioModel model;
  model.mode_ = RatioMode::exact_gaussian;
  model.labels_ = std::move(labels);
  model.counts_.assign(model.labels_.size(), 0);
  for (auto& p : params) {
    if (p.cov.rows() != p.mean.size() || p.cov.cols() != p.mean.size()) {
      throw ConfigError("from_gaussians: covariance shape does not match mean");
    }
    GaussianEnv g;
    g.chol = cholesky(p.cov);
    g.logdet = cholesky_logdet(g.chol);
    g.params = std::move(p);
    model.gaussians_.push_back(std::move(g));
  }
  return model;
}

std::size_t RatioModel::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DataError("ratio model: unknown environment '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t RatioModel::sample_count(const std::string& label) const {
  return counts_[index_of(label)];
}

const PairClassifier& RatioModel::pair_classifier(const std::string& e,
                                                  const std::string& e_prime) const {
  if (mode_ != RatioMode::classifier) {
    throw DataError("ratio model: no pair classifiers in exact_gaussian mode");
  }
  const std::size_t i = index_of(e);
  const std::size_t j = index_of(e_prime);
  const std::size_t lo = std::min(i, j), hi = std::max(i, j);
  if (lo == hi) throw DataError("ratio model: no classifier for a pair of equal environments");
  // index into the packed upper triangle
  const std::size_t k = labels_.size();
  const std::size_t idx = lo * k - lo * (lo + 1) / 2 + (hi - lo - 1);
  return pairs_[idx];
}

double RatioModel::log_density(const GaussianEnv& g, std::span<const double> x) const {
  const std::size_t d = g.params.mean.size();
  std::vector<double> centered(d);
  for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - g.params.mean[j];
  const std::vector<double> solved = cholesky_solve(g.chol, centered);
  const double quad = kernels::dot(centered.data(), solved.data(), d);
  return -0.5 * (quad + g.logdet + static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
}

double RatioModel::ratio_at(const std::string& e, const std::string& e_prime,
                            std::span<const double> x) const {
  const std::size_t i = index_of(e);
  const std::size_t j = index_of(e_prime);
  if (i == j) return 1.0;
  if (mode_ == RatioMode::exact_gaussian) {
    return std::exp(log_density(gaussians_[i], x) - log_density(gaussians_[j], x));
  }
  const PairClassifier& pc = pair_classifier(e, e_prime);
  if (i < j) return pc.ratio_e1_over_e2(x);
  const double p = pc.prob_e1(x);  // probability of e_prime here
  return (static_cast<double>(pc.n1) * (1.0 - p)) / (static_cast<double>(pc.n2) * p);
}

std::vector<double> RatioModel::weights_for(const std::string& e, const std::string& e_prime,
                                            const Matrix& x) const {
  std::vector<double> w(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) w[r] = ratio_at(e, e_prime, x.row_span(r));
  return w;
}

nlohmann::json RatioModel::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode_);
  j["clip_epsilon"] = clip_epsilon_;
  j["environments"] = labels_;
  j["sample_counts"] = counts_;
  if (mode_ == RatioMode::classifier) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pc : pairs_) {
      pairs.push_back({{"e1", pc.e1},
                       {"e2", pc.e2},
                       {"n1", pc.n1},
                       {"n2", pc.n2},
                       {"weights", pc.weights}});
    }
    j["pairs"] = std::move(pairs);
  } else {
    nlohmann::json envs = nlohmann::json::array();
    for (std::size_t i = 0; i < gaussians_.size(); ++i) {
      const auto& g = gaussians_[i].params;
      nlohmann::json cov = nlohmann::json::array();
      for (std::size_t r = 0; r < g.cov.rows(); ++r) {
        cov.push_back(std::vector<double>(g.cov.row(r), g.cov.row(r) + g.cov.cols()));
      }
      envs.push_back({{"env", labels_[i]}, {"mean", g.mean}, {"cov", std::move(cov)}});
    }
    j["gaussians"] = std::move(envs);
  }
  return j;
}

RatioModel RatioModel::from_json(const nlohmann::json& j) {
  try {
    RatioModel model;
    model.mode_ = ratio_mode_from_string(j.at("mode").get<std::string>());
    model.clip_epsilon_ = j.at("clip_epsilon").get<double>();
    if (!(model.clip_epsilon_ > 0.0 && model.clip_epsilon_ < 0.5)) {
      throw ConfigError("ratio model: clip_epsilon out of range");
    }
    model.labels_ = j.at("environments").get<std::vector<std::string>>();
    model.counts_ = j.at("sample_counts").get<std::vector<std::size_t>>();
    if (model.mode_ == RatioMode::classifier) {
      for (const auto& p : j.at("pairs")) {
        PairClassifier pc;
        pc.e1 = p.at("e1").get<std::string>();
        pc.e2 = p.at("e2").get<std::string>();
        pc.n1 = p.at("n1").get<std::size_t>();
        pc.n2 = p.at("n2").get<std::size_t>();
        pc.weights = p.at("weights").get<std::vector<double>>();
        pc.clip_epsilon = model.clip_epsilon_;
        model.pairs_.push_back(std::move(pc));
      }
    } else {
      for (const auto& p : j.at("gaussians")) {
        GaussianParams g;
        g.mean = p.at("mean").get<std::vector<double>>();
        const auto& cov = p.at("cov");
        g.cov = Matrix(g.mean.size(), g.mean.size());
        for (std::size_t r = 0; r < g.mean.size(); ++r) {
          for (std::size_t c = 0; c < g.mean.size(); ++c) g.cov(r, c) = cov.at(r).at(c).get<double>();
        }
        GaussianEnv env;
        env.chol = cholesky(g.cov);
        env.logdet = cholesky_logdet(env.chol);
        env.params = std::move(g);
        model.gaussians_.push_back(std::move(env));
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ratio model json: ") + e.what());
  }
}

std::vector<PairDiagnostics> ratio_diagnostics(const RatioModel& model,
                                               const MultiEnvDataset& data) {
  std::vector<PairDiagnostics> out;
  for (const auto& e : data.labels()) {
    for (const auto& ep : data.labels()) {
      if (e == ep) continue;
      const Matrix& x = data.env(ep).covariates;
      const std::vector<double> w = model.weights_for(e, ep, x);
      PairDiagnostics diag;
      diag.e = e;
      diag.e_prime = ep;
      diag.n = w.size();
      const double total = kernels::sum(w.data(), w.size());
      const double total_sq = kernels::sum_sq(w.data(), w.size());
      diag.mean_weight = total / static_cast<double>(w.size());
      diag.min_weight = *std::min_element(w.begin(), w.end());
      diag.max_weight = *std::max_element(w.begin(), w.end());
      diag.effective_sample_size = total_sq > 0.0 ? total * total / total_sq : 0.0;
      out.push_back(std::move(diag));
    }
  }
  return out;
}

nlohmann::json diagnostics_to_json(const std::vector<PairDiagnostics>& diags) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : diags) {
    arr.push_back({{"e", d.e},
                   {"e_prime", d.e_prime},
                   {"n", d.n},
                   {"mean_weight", d.mean_weight},
                   {"min_weight", d.min_weight},
                   {"max_weight", d.max_weight},
                   {"effective_sample_size", d.effective_sample_size}});
  }
  return nlohmann::json{{"pairs", std::move(arr)}};
}

}  // namespace cric
