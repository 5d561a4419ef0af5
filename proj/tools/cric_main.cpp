// Command-line front end: generate / train / ratio-check / eval / experiment.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric or training
// error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cric/cric.hpp"
#include "cric/csv.hpp"
#include "cric/errors.hpp"
#include "cric/experiment.hpp"
#include "cric/ratio.hpp"
#include "cric/sem.hpp"
#include "cric/train.hpp"

namespace {

using cric::ConfigError;
using cric::DataError;
using cric::NumericError;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid json in '" + path + "': " + e.what());
  }
}

void write_json_output(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + out_path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + out_path + "'");
}

struct CommonDataOptions {
  std::string data_path;
  std::string env_col = "env";
  std::string target_col = "y";

  cric::MultiEnvDataset load() const {
    return cric::load_csv(data_path, env_col, target_col);
  }
};

void add_data_options(CLI::App* cmd, CommonDataOptions& opts) {
  cmd->add_option("--data", opts.data_path, "input dataset CSV")->required();
  cmd->add_option("--env-col", opts.env_col, "environment column name");
  cmd->add_option("--target-col", opts.target_col, "target column name");
}

int run(int argc, char** argv) {
  CLI::App app{"Invariance criterion toolkit: multi-environment data, "
               "invariant-learning trainers, likelihood-ratio weights and the "
               "normalized invariance criterion"};
  app.require_subcommand(1);

  // generate ----------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "generate synthetic SEM data as CSV");
  std::string gen_setting = "FOU";
  std::vector<double> gen_scales = {0.2, 2.0, 5.0};
  std::size_t gen_n = 1200;
  std::size_t gen_dim_x1 = 5, gen_dim_x2 = 5;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--setting", gen_setting, "POU, PEU, FOU or FEU");
  gen->add_option("--scales", gen_scales, "environment scales")->delimiter(',');
  gen->add_option("--n", gen_n, "total sample count across environments");
  gen->add_option("--dim-x1", gen_dim_x1, "causal block dimension");
  gen->add_option("--dim-x2", gen_dim_x2, "outcome-child block dimension");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // train -------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a predictor on a dataset CSV");
  CommonDataOptions train_data;
  add_data_options(train, train_data);
  std::string train_method = "erm";
  std::string train_cfg_path;
  std::string train_out;
  std::optional<double> train_lambda;
  std::optional<std::size_t> train_epochs;
  std::optional<double> train_lr;
  std::optional<double> train_l2;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--method", train_method, "erm, irmv1 or vrex");
  train->add_option("--train-config", train_cfg_path, "TrainConfig JSON file");
  train->add_option("--lambda", train_lambda, "penalty weight override");
  train->add_option("--epochs", train_epochs, "iteration cap override");
  train->add_option("--lr", train_lr, "initial line-search step override");
  train->add_option("--l2", train_l2, "ridge weight override");
  train->add_option("--seed", train_seed, "seed override");
  train->add_option("--out", train_out, "output predictor JSON")->required();

  // ratio-check ---------------------------------------------------------------
  auto* rc = app.add_subcommand("ratio-check", "likelihood-ratio weight diagnostics");
  CommonDataOptions rc_data;
  add_data_options(rc, rc_data);
  std::string rc_mode = "classifier";
  double rc_clip = 1e-3;
  std::string rc_out;
  rc->add_option("--ratio-mode", rc_mode, "classifier or exact-gaussian");
  rc->add_option("--clip-eps", rc_clip, "probability clipping epsilon");
  rc->add_option("--out", rc_out, "output JSON path (stdout if omitted)");

  // eval ----------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "criterion report for a predictor pair");
  CommonDataOptions eval_data;
  add_data_options(eval, eval_data);
  std::string eval_predictor, eval_baseline, eval_out;
  std::string eval_mode = "classifier";
  double eval_clip = 1e-3;
  bool eval_normalize = false;
  eval->add_option("--predictor", eval_predictor, "predictor JSON")->required();
  eval->add_option("--baseline", eval_baseline, "baseline predictor JSON")->required();
  eval->add_option("--ratio-mode", eval_mode, "classifier or exact-gaussian");
  eval->add_option("--clip-eps", eval_clip, "probability clipping epsilon");
  eval->add_flag("--normalize-weights", eval_normalize, "normalize weights to mean 1 per pair");
  eval->add_option("--out", eval_out, "output JSON path (stdout if omitted)");

  // experiment ------------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "replicated synthetic benchmark");
  std::string exp_cfg_path, exp_out;
  std::optional<std::uint64_t> exp_seed;
  bool exp_normalize = false;
  std::optional<std::string> exp_mode;
  std::optional<double> exp_lambda;
  std::optional<std::size_t> exp_epochs;
  exp->add_option("--config", exp_cfg_path, "ExperimentConfig JSON file")->required();
  exp->add_option("--out", exp_out, "output directory")->required();
  exp->add_option("--seed", exp_seed, "base seed override");
  exp->add_option("--ratio-mode", exp_mode, "ratio mode override");
  exp->add_flag("--normalize-weights", exp_normalize, "normalize weights to mean 1 per pair");
  exp->add_option("--lambda", exp_lambda, "penalty weight override for all methods");
  exp->add_option("--epochs", exp_epochs, "iteration cap override for all methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are config errors
  }

  if (gen->parsed()) {
    cric::SemConfig cfg = cric::make_sem_config(cric::sem_setting_from_string(gen_setting),
                                                gen_scales, gen_n, gen_seed, gen_dim_x1,
                                                gen_dim_x2);
    cric::save_csv(cric::generate_sem(cfg), gen_out);
    return 0;
  }

  if (train->parsed()) {
    cric::TrainConfig cfg;
    if (!train_cfg_path.empty()) cfg = cric::TrainConfig::from_json(read_json_file(train_cfg_path));
    if (train_lambda) cfg.lambda = *train_lambda;
    if (train_epochs) cfg.epochs = *train_epochs;
    if (train_lr) cfg.learning_rate = *train_lr;
    if (train_l2) cfg.l2 = *train_l2;
    if (train_seed) cfg.seed = *train_seed;
    const cric::Method method = cric::method_from_string(train_method);
    if (method == cric::Method::erm && !train_lambda && train_cfg_path.empty()) cfg.lambda = 0.0;
    const cric::MultiEnvDataset data = train_data.load();
    cric::Predictor p = method == cric::Method::erm   ? cric::train_erm(data, cfg)
                        : method == cric::Method::irmv1 ? cric::train_irmv1(data, cfg)
                                                        : cric::train_vrex(data, cfg);
    p.save(train_out);
    return 0;
  }

  if (rc->parsed()) {
    cric::RatioConfig cfg;
    cfg.mode = cric::ratio_mode_from_string(rc_mode);
    cfg.clip_epsilon = rc_clip;
    const cric::MultiEnvDataset data = rc_data.load();
    const cric::RatioModel model = cric::RatioModel::fit(data, cfg);
    nlohmann::json out = cric::diagnostics_to_json(cric::ratio_diagnostics(model, data));
    out["model"] = model.to_json();
    write_json_output(out, rc_out);
    return 0;
  }

  if (eval->parsed()) {
    const cric::MultiEnvDataset data = eval_data.load();
    const cric::Predictor predictor = cric::Predictor::load(eval_predictor);
    const cric::Predictor baseline = cric::Predictor::load(eval_baseline);
    if (predictor.feature_dim() != data.feature_dim() ||
        baseline.feature_dim() != data.feature_dim()) {
      throw DataError("eval: predictor dimension does not match dataset feature count");
    }
    cric::RatioConfig rcfg;
    rcfg.mode = cric::ratio_mode_from_string(eval_mode);
    rcfg.clip_epsilon = eval_clip;
    const cric::RatioModel ratio = cric::RatioModel::fit(data, rcfg);
    cric::CricOptions opts;
    opts.weight_normalized = eval_normalize;
    const cric::CricReport report = cric::compute_cric(predictor, baseline, ratio, data, opts);
    write_json_output(report.to_json(), eval_out);
    return 0;
  }

  if (exp->parsed()) {
    cric::ExperimentConfig cfg = cric::ExperimentConfig::from_json(read_json_file(exp_cfg_path));
    if (exp_seed) cfg.base_seed = *exp_seed;
    if (exp_mode) cfg.ratio_mode = cric::ratio_mode_from_string(*exp_mode);
    if (exp_normalize) cfg.weight_normalized = true;
    if (exp_lambda || exp_epochs) {
      for (const cric::Method m : {cric::Method::erm, cric::Method::irmv1, cric::Method::vrex}) {
        cric::TrainConfig tc = cfg.config_for(m);
        if (exp_lambda && m != cric::Method::erm) tc.lambda = *exp_lambda;
        if (exp_epochs) tc.epochs = *exp_epochs;
        cfg.train_cfg[m] = tc;
      }
    }
    const cric::ExperimentResult result = cric::run_experiment(cfg);
    cric::emit_results(result, cfg, exp_out);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
