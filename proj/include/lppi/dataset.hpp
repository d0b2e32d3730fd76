#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace lppi {

// A feature matrix with optional aligned label and prediction columns.
// Row i of every present column refers to the same observation; helpers
// that reorder or subset rows keep the columns aligned. The provenance
// tag records where the rows came from so that predictors trained on the
// same rows can be flagged before they leak into a rectifier.
struct Dataset {
  Eigen::MatrixXd features;
  std::optional<Eigen::VectorXd> labels;
  std::optional<Eigen::VectorXd> predictions;
  std::string provenance;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  bool has_labels() const { return labels.has_value(); }
  bool has_predictions() const { return predictions.has_value(); }
};

// Row subset (duplicates allowed, so this covers both subsampling and
// bootstrap resampling). Labels and predictions follow their rows.
Dataset take_rows(const Dataset& ds, const std::vector<int>& idx);

}  // namespace lppi
