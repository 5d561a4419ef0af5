#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cric/csv.hpp"
#include "cric/dataset.hpp"
#include "cric/errors.hpp"
#include "cric/sem.hpp"

using namespace cric;

namespace {

// Test-side least squares via Gauss-Jordan on the normal equations.
std::vector<double> solve_normal_equations(const Matrix& x, const std::vector<double>& y) {
  const std::size_t d = x.cols() + 1;  // intercept last
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> row(d, 1.0);
    for (std::size_t j = 0; j + 1 < d; ++j) row[j] = x(r, j);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] += row[i] * row[j];
      a[i][d] += row[i] * y[r];
    }
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t j = col; j <= d; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> sol(d);
  for (std::size_t i = 0; i < d; ++i) sol[i] = a[i][d] / a[i][i];
  return sol;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("FOU config has zero structural weights and three environments") {
  const SemConfig cfg = make_sem_config(SemSetting::FOU, {0.2, 2.0, 5.0}, 300, 1);
  for (std::size_t i = 0; i < cfg.dim_x1 * cfg.dim_x1; ++i) CHECK(cfg.w_h_to_1.data()[i] == 0.0);
  for (double v : cfg.w_h_to_y) CHECK(v == 0.0);
  for (double v : cfg.w_y_to_2) CHECK(v == 0.0);
  for (double v : cfg.w_1_to_y) CHECK(v == 1.0);

  const MultiEnvDataset data = generate_sem(cfg);
  CHECK(data.env_count() == 3);
  CHECK(data.feature_dim() == 10);
  CHECK(data.labels()[0] == "0.2");
  CHECK(data.labels()[1] == "2");
  CHECK(data.labels()[2] == "5");
  CHECK(data.total_rows() == 300);
}

TEST_CASE("P settings draw structural weights frozen by seed") {
  const SemConfig a = make_sem_config(SemSetting::POU, {0.2, 2.0}, 100, 9);
  const SemConfig b = make_sem_config(SemSetting::POU, {0.2, 2.0}, 100, 9);
  const SemConfig c = make_sem_config(SemSetting::POU, {0.2, 2.0}, 100, 10);
  CHECK(a.w_h_to_1 == b.w_h_to_1);
  CHECK(a.w_h_to_y == b.w_h_to_y);
  CHECK(!(a.w_h_to_1 == c.w_h_to_1));
  bool any_nonzero = false;
  for (double v : a.w_y_to_2) any_nonzero = any_nonzero || v != 0.0;
  CHECK(any_nonzero);
}

TEST_CASE("generation is bitwise deterministic under a fixed seed") {
  SemConfig cfg = make_sem_config(SemSetting::PEU, {0.5}, 50, 77);
  const MultiEnvDataset a = generate_sem(cfg);
  const MultiEnvDataset b = generate_sem(cfg);
  CHECK(a.env(0).covariates == b.env(0).covariates);
  CHECK(a.env(0).outcomes == b.env(0).outcomes);
  cfg.seed = 78;
  const MultiEnvDataset c = generate_sem(cfg);
  CHECK(!(a.env(0).covariates == c.env(0).covariates));
}

TEST_CASE("FOU at e=2 has X1 coordinate variance near 4") {
  const SemConfig cfg = make_sem_config(SemSetting::FOU, {2.0}, 100000, 3);
  const MultiEnvDataset data = generate_sem(cfg);
  const EnvDataset& env = data.env(0);
  const auto n = static_cast<double>(env.size());
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) mean += env.covariates(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      const double c = env.covariates(i, j) - mean;
      var += c * c;
    }
    var /= n;
    CHECK(var == doctest::Approx(4.0).epsilon(0.025));
  }
}

TEST_CASE("regression of Y on X1 recovers unit weights in F settings") {
  for (const SemSetting s : {SemSetting::FOU, SemSetting::FEU}) {
    const SemConfig cfg = make_sem_config(s, {0.2, 2.0, 5.0}, 120000, 21);
    const MultiEnvDataset data = generate_sem(cfg);
    const EnvDataset pooled = data.pooled();
    Matrix x1(pooled.size(), 5);
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      for (std::size_t j = 0; j < 5; ++j) x1(i, j) = pooled.covariates(i, j);
    }
    const std::vector<double> sol = solve_normal_equations(x1, pooled.outcomes);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::fabs(sol[j] - 1.0) < 0.05);
    }
  }
}

TEST_CASE("n_total splits evenly with the remainder on earlier environments") {
  const SemConfig cfg = make_sem_config(SemSetting::FOU, {1.0, 2.0, 3.0}, 10, 4);
  const MultiEnvDataset data = generate_sem(cfg);
  CHECK(data.env(0).size() == 4);
  CHECK(data.env(1).size() == 3);
  CHECK(data.env(2).size() == 3);
}

TEST_CASE("config validation rejects bad shapes and scales") {
  SemConfig cfg = make_sem_config(SemSetting::FOU, {1.0, 2.0}, 100, 0);
  cfg.w_h_to_y.push_back(0.0);
  CHECK_THROWS_AS(generate_sem(cfg), ConfigError);
  CHECK_THROWS_AS(make_sem_config(SemSetting::FOU, {}, 100, 0), ConfigError);
  CHECK_THROWS_AS(make_sem_config(SemSetting::FOU, {-1.0}, 100, 0), ConfigError);
  CHECK_THROWS_AS(make_sem_config(SemSetting::FOU, {1.0, 1.0}, 100, 0), ConfigError);
  CHECK_THROWS_AS(make_sem_config(SemSetting::FOU, {1.0, 2.0}, 3, 0), ConfigError);
}

TEST_CASE("split_per_env partitions by the stated sizes") {
  const SemConfig cfg = make_sem_config(SemSetting::FOU, {1.0, 2.0}, 20, 5);
  const MultiEnvDataset data = generate_sem(cfg);  // 10 rows per env
  const auto [train, test] = split_per_env(data, 0.8, 11);
  CHECK(train.env(0).size() == 8);
  CHECK(test.env(0).size() == 2);
  CHECK(train.env(1).size() == 8);
  CHECK(test.env(1).size() == 2);

  const auto [train2, test2] = split_per_env(data, 0.8, 11);
  CHECK(train.env(0).covariates == train2.env(0).covariates);
  CHECK(test.env(1).outcomes == test2.env(1).outcomes);
}

TEST_CASE("split_per_env rejects sides below two rows") {
  const SemConfig cfg = make_sem_config(SemSetting::FOU, {1.0}, 3, 5);
  const MultiEnvDataset data = generate_sem(cfg);
  CHECK_THROWS_AS(split_per_env(data, 0.5, 1), DataError);
  CHECK_THROWS_AS(split_per_env(data, 1.5, 1), ConfigError);
}

TEST_CASE("split_per_env preserves the row multiset per environment") {
  const SemConfig cfg = make_sem_config(SemSetting::PEU, {1.0, 3.0}, 30, 6);
  const MultiEnvDataset data = generate_sem(cfg);
  const auto [train, test] = split_per_env(data, 0.6, 17);
  for (std::size_t ei = 0; ei < data.env_count(); ++ei) {
    std::vector<double> all = data.env(ei).outcomes;
    std::vector<double> parts = train.env(ei).outcomes;
    parts.insert(parts.end(), test.env(ei).outcomes.begin(), test.env(ei).outcomes.end());
    std::sort(all.begin(), all.end());
    std::sort(parts.begin(), parts.end());
    CHECK(all == parts);
  }
}

TEST_CASE("csv round trip preserves values and grouping") {
  const SemConfig cfg = make_sem_config(SemSetting::POU, {0.2, 2.0, 5.0}, 30, 8);
  const MultiEnvDataset data = generate_sem(cfg);
  const std::string path = temp_path("cric_roundtrip.csv");
  save_csv(data, path);
  const MultiEnvDataset loaded = load_csv(path, "env", "y");
  REQUIRE(loaded.env_count() == data.env_count());
  CHECK(loaded.labels() == data.labels());
  for (std::size_t ei = 0; ei < data.env_count(); ++ei) {
    CHECK(loaded.env(ei).covariates == data.env(ei).covariates);
    CHECK(loaded.env(ei).outcomes == data.env(ei).outcomes);
  }
  std::filesystem::remove(path);
}

TEST_CASE("csv grouping by environment column") {
  const std::string path = temp_path("cric_group.csv");
  {
    std::ofstream out(path);
    out << "env,y,f1,f2\n";
    out << "a,1.0,0.5,2\n"
        << "a,2.0,0.25,3\n"
        << "a,3.0,0.125,4\n"
        << "b,4.0,1,5\n"
        << "b,5.0,2,6\n"
        << "b,6.0,3,7\n";
  }
  const MultiEnvDataset data = load_csv(path, "env", "y");
  CHECK(data.env_count() == 2);
  CHECK(data.feature_dim() == 2);
  CHECK(data.env("a").size() == 3);
  CHECK(data.env("b").size() == 3);
  CHECK(data.env("a").covariates(1, 0) == 0.25);
  CHECK(data.env("b").outcomes[2] == 6.0);
  std::filesystem::remove(path);
}

TEST_CASE("csv accepts a single environment") {
  const std::string path = temp_path("cric_single_env.csv");
  {
    std::ofstream out(path);
    out << "env,y,x0\n2014,1.5,0.1\n2014,2.5,0.2\n";
  }
  const MultiEnvDataset data = load_csv(path, "env", "y");
  CHECK(data.env_count() == 1);
  std::filesystem::remove(path);
}

TEST_CASE("csv error contracts") {
  const std::string path = temp_path("cric_parse_err.csv");
  {
    std::ofstream out(path);
    out << "env,y,x0\na,1.0,0.1\na,wat,0.2\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(path, "env", "y"), doctest::Contains("line 3"), DataError);
  CHECK_THROWS_AS(load_csv(path, "missing", "y"), DataError);
  CHECK_THROWS_AS(load_csv(path, "env", "missing"), DataError);
  {
    std::ofstream out(path);
    out << "env,y,x0\na,1.0,0.1\na,2.0,0.2\nb,3.0,0.3\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(path, "env", "y"), doctest::Contains("'b'"), DataError);
  CHECK_THROWS_AS(load_csv(temp_path("does_not_exist.csv"), "env", "y"), DataError);
  std::filesystem::remove(path);
}