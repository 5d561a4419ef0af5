#include "cric/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cric/errors.hpp"

namespace cric {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || cell.empty()) {
    throw DataError("csv: non-numeric value '" + cell + "' at line " + std::to_string(line_no) +
                    ", column '" + column + "'");
  }
  return value;
}

}  // namespace

MultiEnvDataset load_csv(const std::string& path, const std::string& env_column,
                         const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);

  std::size_t env_idx = header.size(), target_idx = header.size();
  std::vector<std::size_t> feature_idx;
  std::vector<std::string> feature_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == env_column && env_idx == header.size()) {
      env_idx = i;
    } else if (header[i] == target_column && target_idx == header.size()) {
      target_idx = i;
    } else {
      feature_idx.push_back(i);
      feature_names.push_back(header[i]);
    }
  }
  if (env_idx == header.size()) {
    throw DataError("csv: environment column '" + env_column + "' not found in '" + path + "'");
  }
  if (target_idx == header.size()) {
    throw DataError("csv: target column '" + target_column + "' not found in '" + path + "'");
  }
  if (feature_idx.empty()) throw DataError("csv: no feature columns in '" + path + "'");

  // Group rows per environment label, first-appearance order.
  std::vector<std::string> env_order;
  std::map<std::string, std::vector<std::vector<double>>> rows;
  std::map<std::string, std::vector<double>> targets;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("csv: line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    const std::string& env = fields[env_idx];
    if (env.empty()) {
      throw DataError("csv: empty environment label at line " + std::to_string(line_no));
    }
    if (rows.find(env) == rows.end()) env_order.push_back(env);
    std::vector<double> feat(feature_idx.size());
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      feat[j] = parse_cell(fields[feature_idx[j]], line_no, feature_names[j]);
    }
    targets[env].push_back(parse_cell(fields[target_idx], line_no, target_column));
    rows[env].push_back(std::move(feat));
  }
  if (env_order.empty()) throw DataError("csv: '" + path + "' has no data rows");

  MultiEnvDataset data(feature_idx.size());
  for (const auto& env : env_order) {
    const auto& r = rows[env];
    if (r.size() < 2) {
      throw DataError("csv: environment '" + env + "' has only " + std::to_string(r.size()) +
                      " row(s); need at least 2");
    }
    EnvDataset e;
    e.covariates = Matrix(r.size(), feature_idx.size());
    e.outcomes = targets[env];
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::copy(r[i].begin(), r[i].end(), e.covariates.row(i));
    }
    data.add_environment(env, std::move(e));
  }
  return data;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_csv(const MultiEnvDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  out << "env,y";
  for (std::size_t j = 0; j < data.feature_dim(); ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t ei = 0; ei < data.env_count(); ++ei) {
    const EnvDataset& env = data.env(ei);
    for (std::size_t i = 0; i < env.size(); ++i) {
      out << data.labels()[ei] << ',' << format_double(env.outcomes[i]);
      for (std::size_t j = 0; j < data.feature_dim(); ++j) {
        out << ',' << format_double(env.covariates(i, j));
      }
      out << '\n';
    }
  }
  if (!out) throw DataError("csv: write failed for '" + path + "'");
}

}  // namespace cric
