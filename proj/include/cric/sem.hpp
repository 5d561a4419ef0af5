#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cric/dataset.hpp"
#include "cric/matrix.hpp"

namespace cric {

/// Structural settings: observability of the latent confounder path
/// (F = fully observed, structural weights zero; P = partially observed,
/// weights drawn N(0,1) entrywise) crossed with the outcome-noise regime
/// (O: sigma_y^2 = e^2, sigma_2^2 = 1; E: sigma_y^2 = 1, sigma_2^2 = e^2).
enum class SemSetting { POU, PEU, FOU, FEU };

SemSetting sem_setting_from_string(const std::string& name);
std::string to_string(SemSetting s);

/// Linear structural equation model over environments indexed by a scale e:
///
///   H  ~ N(0, e^2 I)                        (dim_x1 latent components)
///   X1 = W_h_to_1 H + N(0, e^2 I)
///   Y  = w_1_to_y . X1 + w_h_to_y . H + N(0, sigma_y^2)   (scalar)
///   X2 = w_y_to_2 Y + N(0, sigma_2^2 I)
///
/// Covariates are [X1, X2]; outcomes are Y. w_1_to_y defaults to all ones.
struct SemConfig {
  std::vector<double> env_scales;
  SemSetting setting = SemSetting::FOU;
  std::size_t dim_x1 = 5;
  std::size_t dim_x2 = 5;
  Matrix w_h_to_1;                 // dim_x1 x dim_x1
  std::vector<double> w_h_to_y;    // dim_x1
  std::vector<double> w_y_to_2;    // dim_x2
  std::vector<double> w_1_to_y;    // dim_x1
  std::size_t n_total = 0;         // rows across all environments
  std::uint64_t seed = 0;

  std::size_t feature_dim() const { return dim_x1 + dim_x2; }

  /// Throws ConfigError on shape mismatches, non-positive or duplicate
  /// scales, non-zero structural weights in F settings, or n_total too
  /// small to give every environment at least 2 rows.
  void validate() const;
};

/// Build a config with structural weights drawn per `setting`: zero for F,
/// entrywise N(0,1) for P from the stream (param_seed, sem_params). The data
/// seed is set to param_seed too; override `seed` to redraw noise while
/// keeping the same structural weights.
SemConfig make_sem_config(SemSetting setting, std::vector<double> env_scales,
                          std::size_t n_total, std::uint64_t param_seed,
                          std::size_t dim_x1 = 5, std::size_t dim_x2 = 5);

/// Environment label for a scale value ("%g" formatting).
std::string sem_env_label(double scale);

/// Deterministic generation: each (environment, variable) pair draws from
/// its own stream derived from config.seed, so the draws for one variable
/// do not depend on the dimensions of the others. n_total is split evenly
/// across environments with the remainder going to the earliest ones.
MultiEnvDataset generate_sem(const SemConfig& config);

}  // namespace cric
