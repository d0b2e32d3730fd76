#include "lppi/pca.hpp"

#include <string>

#include "lppi/errors.hpp"

namespace lppi {

PcaModel pca_fit(const Eigen::MatrixXd& X, int k) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n < 2) throw InputError("pca needs at least two rows");
  if (k < 1 || k > p)
    throw InputError("pca component count " + std::to_string(k) + " must lie in 1.." +
                     std::to_string(p));

  PcaModel model;
  model.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top k in reverse.
  model.components.resize(k, p);
  model.explained_variance.resize(k);
  for (int c = 0; c < k; ++c) {
    Eigen::Index src = p - 1 - c;
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    model.components.row(c) = v.transpose();
    model.explained_variance[c] = eig.eigenvalues()[src];
  }
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.mean.size())
    throw InputError("pca transform dimension mismatch: data has " +
                     std::to_string(X.cols()) + " columns, model expects " +
                     std::to_string(model.mean.size()));
  return (X.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace lppi
