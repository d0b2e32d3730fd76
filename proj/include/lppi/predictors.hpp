#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>

#include "lppi/dataset.hpp"

namespace lppi {

// A predictor produces a prediction column for arbitrary feature rows.
// Implementations must be pure functions of (their own state, the row),
// so the same rows always get the same predictions no matter how the
// dataset was subset or reordered beforehand.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
  virtual std::string describe() const = 0;
  // Provenance of the rows the predictor was trained on, empty when not
  // applicable. Used to flag train/evaluate leakage.
  virtual std::string training_provenance() const { return ""; }
};

// Wraps a prediction column loaded from elsewhere. predict() requires the
// row count to match exactly, the only alignment check possible.
std::unique_ptr<Predictor> make_file_backed(Eigen::VectorXd predictions);

// Reads a single-column CSV with header "prediction".
std::unique_ptr<Predictor> load_file_backed(const std::string& csv_path);

// k-nearest-neighbor regression on a training dataset with labels.
// Euclidean distance, ties broken by row order.
std::unique_ptr<Predictor> make_knn(std::shared_ptr<const Dataset> train, int k);

// Benchmark predictor: the simulation's m(x) plus centered gaussian noise
// with the given standard deviation. The noise is a pure hash of
// (seed, row contents), so repeated calls and arbitrary row subsets agree.
std::unique_ptr<Predictor> make_noisy_oracle(double sigma, std::uint64_t seed);

/**
 * @brief Attach a prediction column to a copy of the dataset.
 *
 * Refuses when the predictor was trained on rows with the same provenance
 * tag as ds, unless the caller overrides; a rectifier computed against
 * leaked predictions would understate the correction.
 */
Dataset with_predictions(const Dataset& ds, const Predictor& pred,
                         bool allow_shared_provenance = false);

// How good are the predictions that come with a labeled dataset.
struct QualityReport {
  double mse_vs_labels = 0.0;
  double ratio_to_label_second_moment = 0.0;
  // Set when the predictor errs on the scale of the labels themselves; a
  // rectified fit then loses most of its variance advantage.
  bool ppi_likely_unhelpful = false;
};

QualityReport predictor_quality(const Dataset& labeled_with_predictions);

}  // namespace lppi
