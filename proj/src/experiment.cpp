#include "cric/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cric/csv.hpp"
#include "cric/errors.hpp"
#include "cric/rng.hpp"

namespace cric {

Method method_from_string(const std::string& name) {
  if (name == "erm") return Method::erm;
  if (name == "irmv1") return Method::irmv1;
  if (name == "vrex") return Method::vrex;
  throw ConfigError("unknown method '" + name + "' (expected erm, irmv1 or vrex)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::erm: return "erm";
    case Method::irmv1: return "irmv1";
    case Method::vrex: return "vrex";
  }
  return "?";
}

TrainConfig ExperimentConfig::config_for(Method m) const {
  const auto it = train_cfg.find(m);
  if (it != train_cfg.end()) return it->second;
  TrainConfig cfg;
  if (m == Method::erm) cfg.lambda = 0.0;
  return cfg;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ConfigError("experiment config: replicates must be >= 1");
  if (methods.empty()) throw ConfigError("experiment config: methods must be non-empty");
  if (env_scales.size() < 2) {
    throw ConfigError("experiment config: need at least two environment scales");
  }
  if (n_train < 2 * env_scales.size() || n_test < 2 * env_scales.size()) {
    throw ConfigError("experiment config: sample sizes leave an environment below 2 rows");
  }
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
    throw ConfigError("experiment config: clip_epsilon must lie in (0, 0.5)");
  }
  for (Method m : methods) config_for(m).validate();
  config_for(Method::erm).validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["setting"] = to_string(setting);
  j["env_scales"] = env_scales;
  j["n_train"] = n_train;
  j["n_test"] = n_test;
  nlohmann::json ms = nlohmann::json::array();
  for (Method m : methods) ms.push_back(to_string(m));
  j["methods"] = std::move(ms);
  j["replicates"] = replicates;
  nlohmann::json tc;
  for (const auto& [m, cfg] : train_cfg) tc[to_string(m)] = cfg.to_json();
  j["train_cfg"] = std::move(tc);
  j["ratio_mode"] = to_string(ratio_mode);
  j["clip_epsilon"] = clip_epsilon;
  j["weight_normalized"] = weight_normalized;
  j["base_seed"] = base_seed;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("setting")) cfg.setting = sem_setting_from_string(j.at("setting"));
    if (j.contains("env_scales")) cfg.env_scales = j.at("env_scales").get<std::vector<double>>();
    if (j.contains("n_train")) cfg.n_train = j.at("n_train").get<std::size_t>();
    if (j.contains("n_test")) cfg.n_test = j.at("n_test").get<std::size_t>();
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods")) cfg.methods.push_back(method_from_string(m));
    }
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("train_cfg")) {
      for (const auto& [key, value] : j.at("train_cfg").items()) {
        cfg.train_cfg[method_from_string(key)] = TrainConfig::from_json(value);
      }
    }
    if (j.contains("ratio_mode")) cfg.ratio_mode = ratio_mode_from_string(j.at("ratio_mode"));
    if (j.contains("clip_epsilon")) cfg.clip_epsilon = j.at("clip_epsilon").get<double>();
    if (j.contains("weight_normalized")) {
      cfg.weight_normalized = j.at("weight_normalized").get<bool>();
    }
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config json: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

template <typename Fn>
auto annotated(std::size_t replicate, const std::string& what, Fn&& fn) {
  const auto prefix = [&] {
    return "(replicate " + std::to_string(replicate) + ", " + what + "): ";
  };
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix() + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix() + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix() + e.what());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  for (double e : cfg.env_scales) result.env_labels.push_back(sem_env_label(e));

  RatioConfig ratio_cfg;
  ratio_cfg.mode = cfg.ratio_mode;
  ratio_cfg.clip_epsilon = cfg.clip_epsilon;
  CricOptions cric_opts;
  cric_opts.weight_normalized = cfg.weight_normalized;

  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    Rng seeder = Rng::derive(cfg.base_seed, {stream_tag::replicate, r});
    const std::uint64_t param_seed = seeder.next_u64();
    const std::uint64_t train_seed = seeder.next_u64();
    const std::uint64_t test_seed = seeder.next_u64();

    SemConfig sem_train =
        make_sem_config(cfg.setting, cfg.env_scales, cfg.n_train, param_seed);
    sem_train.seed = train_seed;
    SemConfig sem_test = sem_train;  // same structural weights within a replicate
    sem_test.n_total = cfg.n_test;
    sem_test.seed = test_seed;

    const MultiEnvDataset train_data = generate_sem(sem_train);
    const MultiEnvDataset test_data = generate_sem(sem_test);

    const Predictor baseline = annotated(
        r, "method erm", [&] { return train_erm(train_data, cfg.config_for(Method::erm)); });
    std::map<Method, Predictor> predictors;
    predictors.emplace(Method::erm, baseline);
    for (Method m : cfg.methods) {
      if (predictors.count(m)) continue;
      predictors.emplace(m, annotated(r, "method " + to_string(m), [&] {
                           return m == Method::irmv1
                                      ? train_irmv1(train_data, cfg.config_for(m))
                                      : train_vrex(train_data, cfg.config_for(m));
                         }));
    }

    const RatioModel ratio_train =
        annotated(r, "ratio fit (train)", [&] { return RatioModel::fit(train_data, ratio_cfg); });
    const RatioModel ratio_test =
        annotated(r, "ratio fit (test)", [&] { return RatioModel::fit(test_data, ratio_cfg); });

    for (Method m : cfg.methods) {
      const Predictor& pred = predictors.at(m);
      const struct Split {
        const char* name;
        const MultiEnvDataset& data;
        const RatioModel& ratio;
      } splits[2] = {{"train", train_data, ratio_train}, {"test", test_data, ratio_test}};
      for (const auto& split : splits) {
        const CricReport report = annotated(r, "method " + to_string(m), [&] {
          return compute_cric(pred, baseline, split.ratio, split.data, cric_opts);
        });
        ResultRow row;
        row.replicate = r;
        row.setting = to_string(cfg.setting);
        row.method = to_string(m);
        row.split = split.name;
        row.q_hat = report.q_hat;
        row.log10_q_hat = report.log10_q_hat;
        row.numerator = report.numerator;
        row.denominator = report.denominator;
        for (std::size_t ei = 0; ei < split.data.env_count(); ++ei) {
          row.env_risks.push_back(risk(pred, split.data.env(ei)));
        }
        result.rows.push_back(std::move(row));
        for (const auto& s : report.pair_stats_phi) {
          result.q_table.push_back({r, to_string(m), split.name, s.e, s.e_prime,
                                    s.q_cross, s.q_self});
        }
      }
    }
  }
  return result;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  for (double v : values) s.std_dev += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(s.std_dev / n);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

namespace {

nlohmann::json stats_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"std", s.std_dev}, {"median", s.median}};
}

}  // namespace

void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("emit_results: cannot create '" + out_dir + "': " + ec.message());

  const auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
    if (!out) throw DataError("emit_results: cannot write '" + name + "' in '" + out_dir + "'");
    return out;
  };

  {
    std::ofstream out = open("results.csv");
    out << "replicate,setting,method,split,q_hat,log10_q_hat,numerator,denominator";
    for (const auto& label : result.env_labels) out << ",risk_" << label;
    out << '\n';
    for (const auto& row : result.rows) {
      out << row.replicate << ',' << row.setting << ',' << row.method << ',' << row.split << ','
          << format_double(row.q_hat) << ',' << format_double(row.log10_q_hat) << ','
          << format_double(row.numerator) << ',' << format_double(row.denominator);
      for (double r : row.env_risks) out << ',' << format_double(r);
      out << '\n';
    }
    if (!out) throw DataError("emit_results: write failed for results.csv");
  }

  {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& q : result.q_table) {
      entries.push_back({{"replicate", q.replicate},
                         {"method", q.method},
                         {"split", q.split},
                         {"e", q.e},
                         {"e_prime", q.e_prime},
                         {"q_cross", q.q_cross},
                         {"q_self", q.q_self}});
    }
    std::ofstream out = open("q_table.json");
    out << nlohmann::json{{"environments", result.env_labels}, {"entries", std::move(entries)}}
               .dump(2)
        << '\n';
    if (!out) throw DataError("emit_results: write failed for q_table.json");
  }

  {
    nlohmann::json methods;
    for (Method m : cfg.methods) {
      const std::string name = to_string(m);
      nlohmann::json per_method;
      for (const char* split : {"train", "test"}) {
        std::vector<double> q_hats, logs, q_cross;
        for (const auto& row : result.rows) {
          if (row.method == name && row.split == split) {
            q_hats.push_back(row.q_hat);
            logs.push_back(row.log10_q_hat);
          }
        }
        for (const auto& q : result.q_table) {
          if (q.method == name && q.split == split) q_cross.push_back(q.q_cross);
        }
        per_method[split] = {{"q_hat", stats_json(summarize(q_hats))},
                             {"log10_q_hat", stats_json(summarize(logs))},
                             {"q_pairs", stats_json(summarize(q_cross))}};
      }
      methods[name] = std::move(per_method);
    }
    nlohmann::json summary;
    summary["config"] = cfg.to_json();
    summary["conventions"] = {
        {"std", "population (divide by count)"},
        {"median", "average of the two middle values for even counts"},
        {"q_pairs", "flat aggregation over ordered pairs x replicates per split"}};
    summary["methods"] = std::move(methods);
    std::ofstream out = open("summary.json");
    out << summary.dump(2) << '\n';
    if (!out) throw DataError("emit_results: write failed for summary.json");
  }
}

}  // namespace cric
