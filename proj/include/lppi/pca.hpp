#pragma once

#include <Eigen/Dense>

namespace lppi {

// Principal components of a feature matrix. Components are rows, ordered
// by decreasing explained variance, each flipped so its largest-magnitude
// loading is positive. That sign convention makes refits comparable.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;          // k x p, orthonormal rows
  Eigen::VectorXd explained_variance;  // top k eigenvalues of the covariance
};

// Fits by eigendecomposition of the sample covariance (denominator n - 1).
// @throws InputError unless 1 <= k <= p and X has at least two rows.
PcaModel pca_fit(const Eigen::MatrixXd& X, int k);

// Projects rows of X onto the components: (X - mean) C^T.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X);

}  // namespace lppi
