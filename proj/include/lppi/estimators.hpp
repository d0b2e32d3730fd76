#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>

#include "lppi/dataset.hpp"
#include "lppi/kernels.hpp"

namespace lppi {

enum class FitMethod { conventional, ppi, ppi_hd };

// Numerical guardrails shared by every weighted solve. The condition limit
// is a hard error, never a silent regularization: a caller who wants a
// usable estimate from a singular labeled design should move to the
// high-dimensional rectifier instead.
struct SolveOptions {
  double condition_limit = 1e12;
  double min_weight_mass = 1e-12;
};

// Function value and gradient estimated at one target point. The first
// design coordinate is the intercept, so theta() stacks (m_hat, grad_hat).
struct LocalFit {
  double m_hat = 0.0;
  Eigen::VectorXd grad_hat;
  Eigen::VectorXd target;
  FitMethod method = FitMethod::conventional;
  double effective_weight_mass = 0.0;  // total kernel mass behind the fit
  double h = 0.0;

  Eigen::VectorXd theta() const {
    Eigen::VectorXd t(grad_hat.size() + 1);
    t[0] = m_hat;
    t.tail(grad_hat.size()) = grad_hat;
    return t;
  }
};

// Correction term aligning a prediction-based fit with the labels.
struct Rectifier {
  Eigen::VectorXd delta;  // length p + 1
  std::size_t n_used = 0;
  std::optional<double> t;  // set on the high-dimensional path
};

/**
 * @brief Kernel-weighted local linear fit on labeled data.
 *
 * Minimizes sum_i K((X_i - x)/h) (Y_i - theta0 - theta1 . (X_i - x))^2.
 * The displacement columns are not divided by h, so grad_hat is on the
 * scale of the covariates.
 *
 * @throws InputError on missing labels, h <= 0, or shape mismatch.
 * @throws EmptyNeighborhood when the total kernel mass is negligible.
 * @throws SingularDesign when the weighted Gram is ill conditioned,
 *         including the underdetermined case n < p + 1.
 */
LocalFit conventional_fit(const Dataset& labeled, const Eigen::VectorXd& x, double h,
                          const KernelSpec& spec, const SolveOptions& opts = {});

// Same weighted solve with residuals F(X) - Y on the right-hand side.
// Needs labels and predictions on the labeled data.
Rectifier compute_rectifier(const Dataset& labeled, const Eigen::VectorXd& x, double h,
                            const KernelSpec& spec, const SolveOptions& opts = {});

/**
 * @brief Prediction-powered fit: pseudo fit on unlabeled predictions minus
 * the rectifier from the labeled set.
 *
 * Error messages name which of the two designs went singular.
 */
LocalFit ppi_fit(const Dataset& labeled, const Dataset& unlabeled, const Eigen::VectorXd& x,
                 double h, const KernelSpec& spec, const SolveOptions& opts = {});

/**
 * @brief Rectifier through the t-regularized Gram
 * (G_labeled + t G_unlabeled), scaled by (1 + t N / n).
 *
 * Stays solvable when the labeled Gram alone is singular, which is the
 * point: it trades a little bias (vanishing as t -> 0) for existence.
 *
 * @throws InputError unless t > 0.
 */
Rectifier hd_rectifier(const Dataset& labeled, const Dataset& unlabeled,
                       const Eigen::VectorXd& x, double h, const KernelSpec& spec, double t,
                       const SolveOptions& opts = {});

// Pseudo fit minus the high-dimensional rectifier.
LocalFit hd_fit(const Dataset& labeled, const Dataset& unlabeled, const Eigen::VectorXd& x,
                double h, const KernelSpec& spec, double t, const SolveOptions& opts = {});

// Default regularization weight, chosen so t N / n = 0.01.
double default_hd_t(std::size_t n_labeled, std::size_t n_unlabeled);

}  // namespace lppi
