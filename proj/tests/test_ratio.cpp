#include <doctest.h>

#include <cmath>
#include <vector>

#include "cric/errors.hpp"
#include "cric/ratio.hpp"
#include "cric/rng.hpp"

using namespace cric;

namespace {

EnvDataset gaussian_env(Rng& rng, std::size_t n, std::vector<double> mean, double sd) {
  EnvDataset env;
  const std::size_t d = mean.size();
  env.covariates = Matrix(n, d);
  env.outcomes.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      env.covariates(i, j) = mean[j] + sd * rng.next_gaussian();
    }
  }
  return env;
}

RatioModel manual_classifier_model(std::size_t n1, std::size_t n2,
                                   std::vector<double> weights, double eps = 1e-3) {
  nlohmann::json j;
  j["mode"] = "classifier";
  j["clip_epsilon"] = eps;
  j["environments"] = {"a", "b"};
  j["sample_counts"] = {n1, n2};
  j["pairs"] = nlohmann::json::array(
      {{{"e1", "a"}, {"e2", "b"}, {"n1", n1}, {"n2", n2}, {"weights", weights}}});
  return RatioModel::from_json(j);
}

GaussianParams gauss1d(double mean, double var) {
  GaussianParams p;
  p.mean = {mean};
  p.cov = Matrix(1, 1);
  p.cov(0, 0) = var;
  return p;
}

}  // namespace

TEST_CASE("indistinguishable environments give p close to one half") {
  Rng rng(100);
  EnvDataset base = gaussian_env(rng, 400, {0.0, 0.0, 0.0}, 1.0);
  MultiEnvDataset data(3);
  data.add_environment("a", base);
  data.add_environment("b", base);  // exact duplicate
  const RatioModel model = RatioModel::fit(data);
  const PairClassifier& pc = model.pair_classifier("a", "b");
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(std::fabs(pc.prob_e1(base.covariates.row_span(i)) - 0.5) <= 1e-3);
  }
}

TEST_CASE("gaussian location shift recovers the posterior log-odds slope") {
  Rng rng(101);
  MultiEnvDataset data(1);
  data.add_environment("a", gaussian_env(rng, 5000, {2.0}, 1.0));
  data.add_environment("b", gaussian_env(rng, 5000, {0.0}, 1.0));
  const RatioModel model = RatioModel::fit(data);
  const double slope = model.pair_classifier("a", "b").weights[1];
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("separable environments still converge and yield positive ratios") {
  Rng rng(102);
  MultiEnvDataset data(1);
  data.add_environment("a", gaussian_env(rng, 200, {0.0}, 0.1));
  data.add_environment("b", gaussian_env(rng, 200, {100.0}, 0.1));
  const RatioModel model = RatioModel::fit(data);
  for (double x : {-1.0, 0.0, 50.0, 100.0, 1000.0}) {
    const double r = model.ratio_at("a", "b", std::span<const double>(&x, 1));
    CHECK(r > 0.0);
    CHECK(std::isfinite(r));
  }
}

TEST_CASE("ratio formula from counts and probability") {
  const RatioModel model = manual_classifier_model(100, 200, {0.0, 0.0});
  const double x = 3.7;  // any point: zero weights mean p = 1/2 everywhere
  CHECK(model.ratio_at("a", "b", std::span<const double>(&x, 1)) == 2.0);
  CHECK(model.ratio_at("b", "a", std::span<const double>(&x, 1)) == 0.5);
  CHECK(model.ratio_at("a", "a", std::span<const double>(&x, 1)) == 1.0);
  CHECK_THROWS_AS(model.ratio_at("a", "zzz", std::span<const double>(&x, 1)), DataError);
}

TEST_CASE("doubling n2 doubles every ratio exactly") {
  const RatioModel base = manual_classifier_model(150, 80, {0.3, -1.2});
  const RatioModel doubled = manual_classifier_model(150, 160, {0.3, -1.2});
  Rng rng(103);
  for (int i = 0; i < 20; ++i) {
    const double x = 3.0 * rng.next_gaussian();
    const std::span<const double> xs(&x, 1);
    CHECK(doubled.ratio_at("a", "b", xs) == 2.0 * base.ratio_at("a", "b", xs));
  }
}

TEST_CASE("clipping bounds the ratio range") {
  // extreme scores saturate the classifier; eps keeps weights finite
  const RatioModel model = manual_classifier_model(100, 100, {0.0, 10.0}, 1e-3);
  const double lo = -100.0, hi = 100.0;
  const double r_lo = model.ratio_at("a", "b", std::span<const double>(&lo, 1));
  const double r_hi = model.ratio_at("a", "b", std::span<const double>(&hi, 1));
  CHECK(r_lo == doctest::Approx(1e-3 / (1.0 - 1e-3)).epsilon(1e-12));
  CHECK(r_hi == doctest::Approx((1.0 - 1e-3) / 1e-3).epsilon(1e-12));
}

TEST_CASE("exact gaussian ratio examples") {
  const GaussianParams std_normal = gauss1d(0.0, 1.0);
  const GaussianParams shifted = gauss1d(1.0, 1.0);
  const GaussianParams wide = gauss1d(0.0, 4.0);
  const double mid = 0.5, origin = 0.0;
  CHECK(exact_gaussian_ratio(std_normal, shifted, std::span<const double>(&mid, 1)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact_gaussian_ratio(std_normal, wide, std::span<const double>(&origin, 1)) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("exact gaussian reciprocity") {
  Rng rng(104);
  GaussianParams p1, p2;
  p1.mean = {0.3, -0.7, 1.1};
  p2.mean = {-0.2, 0.4, 0.0};
  p1.cov = Matrix(3, 3);
  p2.cov = Matrix(3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    p1.cov(i, i) = 1.0 + 0.5 * static_cast<double>(i);
    p2.cov(i, i) = 2.0 - 0.4 * static_cast<double>(i);
  }
  p1.cov(0, 1) = p1.cov(1, 0) = 0.2;
  p2.cov(1, 2) = p2.cov(2, 1) = -0.3;
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x = {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
    const double fwd = exact_gaussian_ratio(p1, p2, x);
    const double bwd = exact_gaussian_ratio(p2, p1, x);
    CHECK(std::fabs(fwd * bwd - 1.0) <= 1e-12);
  }
}

TEST_CASE("identical gaussian environments weigh exactly one") {
  Rng rng(105);
  MultiEnvDataset data(2);
  data.add_environment("a", gaussian_env(rng, 100, {0.0, 0.0}, 1.0));
  data.add_environment("b", gaussian_env(rng, 100, {0.0, 0.0}, 1.0));
  std::vector<GaussianParams> params;
  GaussianParams p;
  p.mean = {0.0, 0.0};
  p.cov = Matrix::identity(2);
  params.push_back(p);
  params.push_back(p);
  const RatioModel model = RatioModel::from_gaussians({"a", "b"}, std::move(params));
  const auto diags = ratio_diagnostics(model, data);
  REQUIRE(diags.size() == 2);
  for (const auto& d : diags) {
    CHECK(d.mean_weight == 1.0);
    CHECK(d.effective_sample_size == doctest::Approx(static_cast<double>(d.n)));
  }
}

TEST_CASE("same-distribution classifier weights average near one") {
  Rng rng(106);
  MultiEnvDataset data(2);
  data.add_environment("a", gaussian_env(rng, 5000, {0.0, 0.0}, 1.0));
  data.add_environment("b", gaussian_env(rng, 5000, {0.0, 0.0}, 1.0));
  const RatioModel model = RatioModel::fit(data);
  for (const auto& d : ratio_diagnostics(model, data)) {
    CHECK(d.mean_weight > 0.9);
    CHECK(d.mean_weight < 1.1);
  }
}

TEST_CASE("shifted environments lose effective sample size") {
  Rng rng(107);
  MultiEnvDataset data(2);
  data.add_environment("a", gaussian_env(rng, 1000, {0.0, 0.0}, 1.0));
  data.add_environment("b", gaussian_env(rng, 1000, {2.5, -2.0}, 1.0));
  const RatioModel model = RatioModel::fit(data);
  for (const auto& d : ratio_diagnostics(model, data)) {
    CHECK(d.effective_sample_size < static_cast<double>(d.n));
    CHECK(d.min_weight > 0.0);
    CHECK(std::isfinite(d.max_weight));
  }
}

TEST_CASE("mean weight approaches one as the sample grows") {
  // law-of-large-numbers sanity on same-distribution pairs, averaged over seeds
  const std::size_t sizes[3] = {500, 5000, 50000};
  double avg_err[3] = {0.0, 0.0, 0.0};
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    for (int si = 0; si < 3; ++si) {
      Rng rng(900 + s * 7 + si);
      MultiEnvDataset data(2);
      data.add_environment("a", gaussian_env(rng, sizes[si], {0.0, 0.0}, 1.0));
      data.add_environment("b", gaussian_env(rng, sizes[si], {0.0, 0.0}, 1.0));
      const RatioModel model = RatioModel::fit(data);
      const auto diags = ratio_diagnostics(model, data);
      avg_err[si] += std::fabs(diags[0].mean_weight - 1.0);
    }
  }
  for (double& e : avg_err) e /= seeds;
  CHECK(avg_err[0] > avg_err[1]);
  CHECK(avg_err[1] > avg_err[2]);
}

TEST_CASE("classifier fit reports non-convergence with the gradient norm") {
  Rng rng(108);
  MultiEnvDataset data(1);
  data.add_environment("a", gaussian_env(rng, 500, {3.0}, 1.0));
  data.add_environment("b", gaussian_env(rng, 500, {0.0}, 1.0));
  RatioConfig cfg;
  cfg.fit.max_iter = 1;
  CHECK_THROWS_WITH_AS(RatioModel::fit(data, cfg), doctest::Contains("grad"), NumericError);
}

TEST_CASE("invalid clip epsilon is rejected") {
  RatioConfig cfg;
  cfg.clip_epsilon = 0.5;
  Rng rng(109);
  MultiEnvDataset data(1);
  data.add_environment("a", gaussian_env(rng, 10, {0.0}, 1.0));
  CHECK_THROWS_AS(RatioModel::fit(data, cfg), ConfigError);
}

TEST_CASE("json round trip reproduces ratios bitwise") {
  Rng rng(110);
  MultiEnvDataset data(2);
  data.add_environment("a", gaussian_env(rng, 300, {0.0, 0.5}, 1.0));
  data.add_environment("b", gaussian_env(rng, 200, {1.0, -0.5}, 1.5));

  for (const RatioMode mode : {RatioMode::classifier, RatioMode::exact_gaussian}) {
    RatioConfig cfg;
    cfg.mode = mode;
    const RatioModel model = RatioModel::fit(data, cfg);
    const RatioModel restored = RatioModel::from_json(model.to_json());
    for (int i = 0; i < 25; ++i) {
      const std::vector<double> x = {2.0 * rng.next_gaussian(), 2.0 * rng.next_gaussian()};
      CHECK(model.ratio_at("a", "b", x) == restored.ratio_at("a", "b", x));
      CHECK(model.ratio_at("b", "a", x) == restored.ratio_at("b", "a", x));
    }
  }
}