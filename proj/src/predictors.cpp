#include "lppi/predictors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "lppi/csv.hpp"
#include "lppi/errors.hpp"
#include "lppi/rng.hpp"
#include "lppi/simulate.hpp"
#include "lppi/special_functions.hpp"

namespace lppi {

namespace {

class FileBackedPredictor final : public Predictor {
 public:
  explicit FileBackedPredictor(Eigen::VectorXd preds) : preds_(std::move(preds)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    if (X.rows() != preds_.size())
      throw InputError("file-backed predictions hold " + std::to_string(preds_.size()) +
                       " rows, dataset has " + std::to_string(X.rows()));
    return preds_;
  }

  std::string describe() const override {
    return "file_backed(" + std::to_string(preds_.size()) + " rows)";
  }

 private:
  Eigen::VectorXd preds_;
};

class KnnPredictor final : public Predictor {
 public:
  KnnPredictor(std::shared_ptr<const Dataset> train, int k) : train_(std::move(train)), k_(k) {
    if (!train_) throw InputError("knn needs a training dataset");
    if (!train_->has_labels()) throw InputError("knn training dataset has no labels");
    if (k_ < 1 || static_cast<std::size_t>(k_) > train_->rows())
      throw InputError("knn k = " + std::to_string(k_) + " must lie in 1.." +
                       std::to_string(train_->rows()));
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    if (X.cols() != train_->features.cols())
      throw InputError("knn dimension mismatch: query has " + std::to_string(X.cols()) +
                       " columns, training data has " +
                       std::to_string(train_->features.cols()));
    const Eigen::Index n = train_->features.rows();
    Eigen::VectorXd out(X.rows());
    std::vector<int> order(static_cast<std::size_t>(n));
    Eigen::VectorXd dist(n);
    for (Eigen::Index q = 0; q < X.rows(); ++q) {
      dist = (train_->features.rowwise() - X.row(q)).rowwise().squaredNorm();
      std::iota(order.begin(), order.end(), 0);
      std::nth_element(order.begin(), order.begin() + (k_ - 1), order.end(),
                       [&](int a, int b) {
                         if (dist[a] != dist[b]) return dist[a] < dist[b];
                         return a < b;
                       });
      double sum = 0.0;
      for (int i = 0; i < k_; ++i) sum += (*train_->labels)[order[i]];
      out[q] = sum / k_;
    }
    return out;
  }

  std::string describe() const override { return "knn(k=" + std::to_string(k_) + ")"; }
  std::string training_provenance() const override { return train_->provenance; }

 private:
  std::shared_ptr<const Dataset> train_;
  int k_;
};

class NoisyOraclePredictor final : public Predictor {
 public:
  NoisyOraclePredictor(double sigma, std::uint64_t seed) : sigma_(sigma), seed_(seed) {
    if (sigma_ < 0.0) throw InputError("noisy oracle sigma must be nonnegative");
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      Eigen::VectorXd x = X.row(i).transpose();
      double noise = 0.0;
      if (sigma_ > 0.0) {
        // Hash of the row contents, not the row index: a subset of rows
        // keeps exactly the predictions it had in the full dataset.
        std::uint64_t state = splitmix64(seed_ ^ 0x9d8f3c1bULL);
        for (Eigen::Index j = 0; j < x.size(); ++j)
          state = splitmix64(state ^ std::bit_cast<std::uint64_t>(x[j]));
        double u = ((state >> 11) + 0.5) * 0x1.0p-53;
        noise = sigma_ * normal_quantile(u);
      }
      out[i] = simulate_m(x) + noise;
    }
    return out;
  }

  std::string describe() const override {
    return "noisy_oracle(sigma=" + std::to_string(sigma_) + ")";
  }

 private:
  double sigma_;
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<Predictor> make_file_backed(Eigen::VectorXd predictions) {
  return std::make_unique<FileBackedPredictor>(std::move(predictions));
}

std::unique_ptr<Predictor> load_file_backed(const std::string& csv_path) {
  CsvSchema schema;
  schema.feature_columns = {"prediction"};
  LoadReport report = load_csv(csv_path, schema);
  return make_file_backed(report.dataset.features.col(0));
}

std::unique_ptr<Predictor> make_knn(std::shared_ptr<const Dataset> train, int k) {
  return std::make_unique<KnnPredictor>(std::move(train), k);
}

std::unique_ptr<Predictor> make_noisy_oracle(double sigma, std::uint64_t seed) {
  return std::make_unique<NoisyOraclePredictor>(sigma, seed);
}

Dataset with_predictions(const Dataset& ds, const Predictor& pred,
                         bool allow_shared_provenance) {
  std::string trained_on = pred.training_provenance();
  if (!allow_shared_provenance && !trained_on.empty() && trained_on == ds.provenance)
    throw InputError("predictor was trained on rows with provenance '" + trained_on +
                     "', the same as the dataset being predicted; pass the override to "
                     "accept the leakage");
  Dataset out = ds;
  out.predictions = pred.predict(ds.features);
  return out;
}

QualityReport predictor_quality(const Dataset& labeled_with_predictions) {
  const Dataset& ds = labeled_with_predictions;
  if (!ds.has_labels()) throw InputError("predictor_quality needs labels");
  if (!ds.has_predictions()) throw InputError("predictor_quality needs predictions");
  if (ds.rows() == 0) throw InputError("predictor_quality: dataset is empty");
  QualityReport report;
  Eigen::ArrayXd err = (*ds.predictions - *ds.labels).array();
  report.mse_vs_labels = err.square().mean();
  double second_moment = ds.labels->array().square().mean();
  if (second_moment <= 0.0) {
    report.ratio_to_label_second_moment = std::numeric_limits<double>::infinity();
  } else {
    report.ratio_to_label_second_moment = report.mse_vs_labels / second_moment;
  }
  report.ppi_likely_unhelpful = !(report.ratio_to_label_second_moment <= 0.5);
  return report;
}

}  // namespace lppi
