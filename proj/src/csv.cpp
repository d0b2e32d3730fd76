#include "lppi/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lppi/errors.hpp"

namespace lppi {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

std::string trimmed(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool is_nan_token(const std::string& cell) {
  if (cell.empty()) return true;
  std::string low = cell;
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return low == "nan" || low == "na";
}

// Parses one cell; NaN tokens become quiet NaN, garbage throws.
double parse_cell(const std::string& path, std::size_t row, const std::string& column,
                  const std::string& raw) {
  std::string cell = trimmed(raw);
  if (is_nan_token(cell)) return std::nan("");
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') throw ParseError(path, row, column, cell);
  return v;
}

}  // namespace

LoadReport load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.feature_columns.empty())
    throw InputError("csv schema needs at least one feature column");
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file, expected a header row");
  std::vector<std::string> header = split_line(line, schema.delimiter);
  for (auto& name : header) name = trimmed(name);

  auto column_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw InputError(path + ": column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::size_t> feat_idx;
  feat_idx.reserve(schema.feature_columns.size());
  for (const auto& name : schema.feature_columns) feat_idx.push_back(column_index(name));
  std::optional<std::size_t> label_idx, pred_idx;
  if (schema.label_column) label_idx = column_index(*schema.label_column);
  if (schema.prediction_column) pred_idx = column_index(*schema.prediction_column);

  const int p = static_cast<int>(feat_idx.size());
  std::vector<double> feats;
  std::vector<double> labels, preds;
  std::size_t dropped = 0;
  std::size_t row_no = 1;
  std::vector<double> row_buf(static_cast<std::size_t>(p) + 2);

  while (std::getline(in, line)) {
    ++row_no;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> cells = split_line(line, schema.delimiter);
    if (cells.size() < header.size())
      throw InputError(path + ": row " + std::to_string(row_no) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    bool any_nan = false;
    for (int j = 0; j < p; ++j) {
      row_buf[j] = parse_cell(path, row_no, header[feat_idx[j]], cells[feat_idx[j]]);
      any_nan = any_nan || std::isnan(row_buf[j]);
    }
    double label = 0.0, pred = 0.0;
    if (label_idx) {
      label = parse_cell(path, row_no, header[*label_idx], cells[*label_idx]);
      any_nan = any_nan || std::isnan(label);
    }
    if (pred_idx) {
      pred = parse_cell(path, row_no, header[*pred_idx], cells[*pred_idx]);
      any_nan = any_nan || std::isnan(pred);
    }
    if (any_nan) {
      ++dropped;
      continue;
    }
    feats.insert(feats.end(), row_buf.begin(), row_buf.begin() + p);
    if (label_idx) labels.push_back(label);
    if (pred_idx) preds.push_back(pred);
  }

  const std::size_t n = feats.size() / p;
  LoadReport report;
  report.dropped_rows = dropped;
  report.dataset.features.resize(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) report.dataset.features(i, j) = feats[i * p + j];
  if (label_idx)
    report.dataset.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), labels.size());
  if (pred_idx)
    report.dataset.predictions = Eigen::Map<Eigen::VectorXd>(preds.data(), preds.size());
  return report;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& values, char delimiter) {
  if (values.cols() != static_cast<Eigen::Index>(columns.size()))
    throw InputError("write_csv: " + std::to_string(columns.size()) + " column names for " +
                     std::to_string(values.cols()) + " value columns");
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (j) out << delimiter;
    out << columns[j];
  }
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << delimiter;
      std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

Dataset take_rows(const Dataset& ds, const std::vector<int>& idx) {
  Dataset out;
  out.provenance = ds.provenance;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), ds.features.cols());
  if (ds.labels) out.labels = Eigen::VectorXd(idx.size());
  if (ds.predictions) out.predictions = Eigen::VectorXd(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int r = idx[i];
    if (r < 0 || r >= ds.features.rows())
      throw InputError("row index " + std::to_string(r) + " out of range 0.." +
                       std::to_string(ds.features.rows() - 1));
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(r);
    if (ds.labels) (*out.labels)[static_cast<Eigen::Index>(i)] = (*ds.labels)[r];
    if (ds.predictions)
      (*out.predictions)[static_cast<Eigen::Index>(i)] = (*ds.predictions)[r];
  }
  return out;
}

}  // namespace lppi
