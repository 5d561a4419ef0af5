#pragma once

#include <string>

#include "cric/dataset.hpp"

namespace cric {

/// Load a multi-environment dataset from a CSV file: UTF-8, comma-separated,
/// header row, '.' decimal separator, no quoting. `env_column` holds the
/// environment label (any string), `target_column` the real-valued outcome;
/// every other column is a real feature, kept in header order. Rows are
/// grouped by environment in order of first appearance. Throws DataError on
/// missing columns, non-numeric cells (named by line and column) or
/// environments with fewer than 2 rows.
MultiEnvDataset load_csv(const std::string& path, const std::string& env_column,
                         const std::string& target_column);

/// Write `data` with the generator conventions: header "env,y,x0..x{d-1}",
/// environments in dataset order, values formatted with 17 significant
/// digits so a rewrite of the same dataset is byte-identical.
void save_csv(const MultiEnvDataset& data, const std::string& path);

/// Round-trip double formatting ("%.17g") shared by all text outputs.
std::string format_double(double v);

}  // namespace cric
