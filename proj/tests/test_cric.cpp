#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cric/cric.hpp"
#include "cric/errors.hpp"
#include "cric/rng.hpp"
#include "cric/sem.hpp"
#include "cric/train.hpp"

using namespace cric;

namespace {

EnvDataset gaussian_env(Rng& rng, std::size_t n, std::size_t d, double shift, double sd) {
  EnvDataset env;
  env.covariates = Matrix(n, d);
  env.outcomes.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) env.covariates(i, j) = shift + sd * rng.next_gaussian();
  }
  return env;
}

RatioModel exact_model_for(const MultiEnvDataset& data) {
  RatioConfig cfg;
  cfg.mode = RatioMode::exact_gaussian;
  return RatioModel::fit(data, cfg);
}

Predictor scaled(const Predictor& p, double alpha) {
  std::vector<double> w = p.effective_coefficients();
  for (double& v : w) v *= alpha;
  return Predictor::linear(std::move(w), alpha * p.intercept(), p.kind());
}

}  // namespace

TEST_CASE("plain mean prediction per environment") {
  MultiEnvDataset data(1);
  EnvDataset env;
  env.covariates = Matrix(4, 1);
  env.covariates(0, 0) = 1.0;
  env.covariates(1, 0) = 2.0;
  env.covariates(2, 0) = 3.0;
  env.covariates(3, 0) = 4.0;
  env.outcomes = {0.0, 0.0, 0.0, 0.0};
  data.add_environment("a", std::move(env));

  const Predictor identity = Predictor::linear({1.0}, 0.0, PredictorKind::irm_style);
  CHECK(q_hat_self(identity, "a", data) == 2.5);

  const Predictor constant = Predictor::linear({0.0}, 7.25, PredictorKind::irm_style);
  CHECK(q_hat_self(constant, "a", data) == 7.25);

  EnvDataset sym;
  sym.covariates = Matrix(2, 1);
  sym.covariates(0, 0) = -1.0;
  sym.covariates(1, 0) = 1.0;
  sym.outcomes = {0.0, 0.0};
  MultiEnvDataset data2(1);
  data2.add_environment("a", std::move(sym));
  CHECK(q_hat_self(identity, "a", data2) == 0.0);

  CHECK_THROWS_AS(q_hat_self(identity, "nope", data), DataError);
}

TEST_CASE("reweighted mean uses the stated weights") {
  // feature 0 carries the prediction, feature 1 drives the pair classifier;
  // log-odds scores ln(0.5), 0, ln(1.5) give weights 0.5, 1, 1.5 at equal counts
  MultiEnvDataset data(2);
  EnvDataset target;
  target.covariates = Matrix(2, 2);
  target.outcomes = {0.0, 0.0};
  data.add_environment("a", std::move(target));
  EnvDataset source;
  source.covariates = Matrix(3, 2);
  source.covariates(0, 0) = 1.0;
  source.covariates(0, 1) = std::log(0.5);
  source.covariates(1, 0) = 2.0;
  source.covariates(1, 1) = 0.0;
  source.covariates(2, 0) = 3.0;
  source.covariates(2, 1) = std::log(1.5);
  source.outcomes = {0.0, 0.0, 0.0};
  data.add_environment("b", std::move(source));

  nlohmann::json j;
  j["mode"] = "classifier";
  j["clip_epsilon"] = 1e-3;
  j["environments"] = {"a", "b"};
  j["sample_counts"] = {3, 3};
  j["pairs"] = nlohmann::json::array(
      {{{"e1", "a"}, {"e2", "b"}, {"n1", 3}, {"n2", 3}, {"weights", {0.0, 0.0, 1.0}}}});
  const RatioModel ratio = RatioModel::from_json(j);

  const Predictor p = Predictor::linear({1.0, 0.0}, 0.0, PredictorKind::irm_style);
  CHECK(q_hat_cross(p, ratio, "a", "b", data) == doctest::Approx(7.0 / 3.0).epsilon(1e-12));

  const Predictor zero = Predictor::linear({0.0, 0.0}, 0.0, PredictorKind::irm_style);
  CHECK(q_hat_cross(zero, ratio, "a", "b", data) == 0.0);
  CHECK_THROWS_AS(q_hat_cross(p, ratio, "a", "zzz", data), DataError);
}

TEST_CASE("unit weights reduce the reweighted mean to the plain mean") {
  Rng rng(200);
  MultiEnvDataset data(2);
  data.add_environment("a", gaussian_env(rng, 40, 2, 0.0, 1.0));
  data.add_environment("b", gaussian_env(rng, 30, 2, 0.0, 1.0));
  std::vector<GaussianParams> params(2);
  for (auto& p : params) {
    p.mean = {0.0, 0.0};
    p.cov = Matrix::identity(2);
  }
  const RatioModel ratio = RatioModel::from_gaussians({"a", "b"}, std::move(params));
  const Predictor p = Predictor::linear({0.7, -0.3}, 0.1, PredictorKind::irm_style);
  CHECK(q_hat_cross(p, ratio, "a", "b", data) == q_hat_self(p, "b", data));
}

TEST_CASE("reweighted mean agrees with a direct loop") {
  Rng rng(201);
  MultiEnvDataset data(3);
  data.add_environment("a", gaussian_env(rng, 25, 3, 0.0, 1.0));
  data.add_environment("b", gaussian_env(rng, 35, 3, 0.5, 1.2));
  const RatioModel ratio = exact_model_for(data);
  const Predictor p = Predictor::linear({0.4, -1.0, 0.25}, 0.6, PredictorKind::irm_style);

  double expect = 0.0;
  const EnvDataset& src = data.env("b");
  for (std::size_t i = 0; i < src.size(); ++i) {
    expect += p.predict(src.covariates.row_span(i)) *
              ratio.ratio_at("a", "b", src.covariates.row_span(i));
  }
  expect /= static_cast<double>(src.size());
  CHECK(q_hat_cross(p, ratio, "a", "b", data) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("identical predictor and baseline give exactly one") {
  const SemConfig sem = make_sem_config(SemSetting::FOU, {0.2, 2.0, 5.0}, 120, 17);
  const MultiEnvDataset data = generate_sem(sem);
  const RatioModel ratio = RatioModel::fit(data);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.epochs = 3000;
  const Predictor erm = train_erm(data, cfg);
  const CricReport report = compute_cric(erm, erm, ratio, data);
  CHECK(report.q_hat == 1.0);
  CHECK(report.log10_q_hat == 0.0);
  CHECK(report.numerator == report.denominator);
}

TEST_CASE("zero predictor gives exactly zero") {
  const SemConfig sem = make_sem_config(SemSetting::FOU, {0.2, 2.0, 5.0}, 120, 18);
  const MultiEnvDataset data = generate_sem(sem);
  const RatioModel ratio = RatioModel::fit(data);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.epochs = 3000;
  const Predictor erm = train_erm(data, cfg);
  const Predictor zero =
      Predictor::linear(std::vector<double>(data.feature_dim(), 0.0), 0.0,
                        PredictorKind::irm_style);
  const CricReport report = compute_cric(zero, erm, ratio, data);
  CHECK(report.q_hat == 0.0);
  CHECK(report.numerator == 0.0);
  CHECK(report.log10_q_hat == -std::numeric_limits<double>::infinity());
  CHECK(report.to_json().at("log10_q_hat").is_null());
  for (const auto& s : report.pair_stats_phi) CHECK(s.squared_gap == 0.0);
}

TEST_CASE("scaling both predictors leaves the criterion unchanged") {
  const SemConfig sem = make_sem_config(SemSetting::PEU, {0.5, 2.0}, 100, 19);
  const MultiEnvDataset data = generate_sem(sem);
  const RatioModel ratio = RatioModel::fit(data);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.epochs = 3000;
  const Predictor erm = train_erm(data, cfg);
  std::vector<double> w(data.feature_dim(), 0.0);
  w[0] = 1.0;
  w[5] = -2.0;
  const Predictor p = Predictor::linear(std::move(w), 0.4, PredictorKind::irm_style);
  const double base = compute_cric(p, erm, ratio, data).q_hat;
  for (const double alpha : {-3.0, 0.5, 7.0}) {
    Predictor sp = scaled(p, alpha);
    Predictor sb = scaled(erm, alpha);
    const double q = compute_cric(sp, sb, ratio, data).q_hat;
    CHECK(std::fabs(q - base) <= 1e-12 * base);
  }
}

TEST_CASE("pair statistics expose the squared gap identity") {
  const SemConfig sem = make_sem_config(SemSetting::POU, {0.5, 1.5}, 80, 20);
  const MultiEnvDataset data = generate_sem(sem);
  const RatioModel ratio = RatioModel::fit(data);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.epochs = 2000;
  const Predictor erm = train_erm(data, cfg);
  const CricReport report = compute_cric(erm, erm, ratio, data);
  CHECK(report.pair_stats_phi.size() == 2);  // ordered pairs of two environments
  double num = 0.0;
  for (const auto& s : report.pair_stats_phi) {
    CHECK(s.squared_gap == (s.q_cross - s.q_self) * (s.q_cross - s.q_self));
    num += s.squared_gap;
  }
  CHECK(report.numerator == num);
  CHECK(report.q_hat >= 0.0);
}

TEST_CASE("sample order does not change the criterion") {
  Rng rng(202);
  const SemConfig sem = make_sem_config(SemSetting::PEU, {0.5, 2.0, 4.0}, 240, 21);
  const MultiEnvDataset data = generate_sem(sem);
  MultiEnvDataset permuted(data.feature_dim());
  for (std::size_t ei = 0; ei < data.env_count(); ++ei) {
    const EnvDataset& env = data.env(ei);
    std::vector<std::size_t> order(env.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.next_below(i + 1)]);
    }
    EnvDataset shuffled;
    shuffled.covariates = Matrix(env.size(), data.feature_dim());
    shuffled.outcomes.resize(env.size());
    for (std::size_t i = 0; i < env.size(); ++i) {
      for (std::size_t j = 0; j < data.feature_dim(); ++j) {
        shuffled.covariates(i, j) = env.covariates(order[i], j);
      }
      shuffled.outcomes[i] = env.outcomes[order[i]];
    }
    permuted.add_environment(data.labels()[ei], std::move(shuffled));
  }

  const RatioModel ratio = exact_model_for(data);  // same weights for both orders
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.epochs = 2000;
  const Predictor erm = train_erm(data, cfg);
  std::vector<double> w(data.feature_dim(), 0.3);
  const Predictor p = Predictor::linear(std::move(w), -0.2, PredictorKind::irm_style);

  const double a = compute_cric(p, erm, ratio, data).q_hat;
  const double b = compute_cric(p, erm, ratio, permuted).q_hat;
  CHECK(std::fabs(a - b) <= 1e-10 * std::max(a, b));
}

TEST_CASE("normalized weights buy exact affine invariance") {
  const SemConfig sem = make_sem_config(SemSetting::PEU, {0.5, 2.0}, 140, 22);
  const MultiEnvDataset data = generate_sem(sem);
  const RatioModel ratio = RatioModel::fit(data);
  TrainConfig tc;
  tc.lambda = 0.0;
  tc.epochs = 3000;
  const Predictor erm = train_erm(data, tc);
  std::vector<double> w(data.feature_dim(), 0.0);
  w[2] = 1.4;
  w[7] = -0.6;
  const Predictor p = Predictor::linear(std::move(w), 0.25, PredictorKind::irm_style);

  CricOptions opts;
  opts.weight_normalized = true;
  const double base = compute_cric(p, erm, ratio, data, opts).q_hat;

  const double alpha = 1.7, c = 0.9;
  Predictor ap = Predictor::linear(
      [&] {
        auto v = p.effective_coefficients();
        for (double& x : v) x *= alpha;
        return v;
      }(),
      alpha * p.intercept() + c, p.kind());
  Predictor ab = Predictor::linear(
      [&] {
        auto v = erm.effective_coefficients();
        for (double& x : v) x *= alpha;
        return v;
      }(),
      alpha * erm.intercept() + c, erm.kind());
  const double affine = compute_cric(ap, ab, ratio, data, opts).q_hat;
  CHECK(std::fabs(affine - base) <= 1e-10 * base);
}

TEST_CASE("structural and degenerate error paths") {
  Rng rng(203);
  MultiEnvDataset single(2);
  single.add_environment("only", gaussian_env(rng, 10, 2, 0.0, 1.0));
  std::vector<GaussianParams> params(1);
  params[0].mean = {0.0, 0.0};
  params[0].cov = Matrix::identity(2);
  const RatioModel ratio_single = RatioModel::from_gaussians({"only"}, std::move(params));
  const Predictor p = Predictor::linear({1.0, 1.0}, 0.0, PredictorKind::irm_style);
  const Predictor b = Predictor::linear({1.0, 1.0}, 0.0, PredictorKind::erm_baseline);
  CHECK_THROWS_AS(compute_cric(p, b, ratio_single, single), DataError);

  MultiEnvDataset data(2);
  data.add_environment("a", gaussian_env(rng, 20, 2, 0.0, 1.0));
  data.add_environment("b", gaussian_env(rng, 20, 2, 1.0, 1.0));
  const RatioModel ratio = exact_model_for(data);
  const Predictor zero_baseline = Predictor::linear({0.0, 0.0}, 0.0, PredictorKind::erm_baseline);
  CHECK_THROWS_AS(compute_cric(p, zero_baseline, ratio, data), NumericError);
  CHECK_THROWS_AS(compute_cric(p, p, ratio, data), ConfigError);  // baseline kind enforced
}

TEST_CASE("integrated criterion is the scalar combination") {
  CHECK(integrated_criterion(0.42, 9.0, 0.0) == 0.42);
  CHECK(integrated_criterion(0.5, 0.2, 1.0) == 0.7);
  CHECK(integrated_criterion(0.364, 0.135, 2.0) == doctest::Approx(0.634).epsilon(1e-12));
}