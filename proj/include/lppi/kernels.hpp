#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace lppi {

enum class KernelFamily { gaussian, epanechnikov };

// A kernel is always evaluated on standardized displacements u = (X_i - x) / h.
// Both families integrate to one over R^p and are spherically symmetric.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  int p = 1;
};

// Moment constants of a kernel:
//   mu2 = int u_1^2 K(u) du,  j0 = int K(u)^2 du,  j2 = int u_1^2 K(u)^2 du.
// These feed the asymptotic covariance and the coverage formulas.
struct KernelMoments {
  double mu2 = 0.0;
  double j0 = 0.0;
  double j2 = 0.0;
  int p = 0;
};

/**
 * @brief Evaluate the kernel density at a standardized displacement.
 *
 * Gaussian: (2 pi)^(-p/2) exp(-|u|^2 / 2).
 * Epanechnikov (spherical): c_p (1 - |u|^2) for |u| <= 1, zero outside,
 * with c_p chosen so the kernel integrates to one over R^p.
 *
 * @throws InputError if u.size() != spec.p or spec.p < 1.
 */
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& u);

// K(0), the maximum of the kernel. Weights never exceed this.
double kernel_max(const KernelSpec& spec);

// Closed-form moment constants for the supported families.
KernelMoments compute_moments(const KernelSpec& spec);

// int u_1^4 K(u) du. Needed by the bias plug-ins for non-gaussian kernels.
double fourth_marginal_moment(const KernelSpec& spec);

/**
 * @brief Kernel weights of every row of X against a target point.
 *
 * w_i = K((X_i - x) / h). Rows of X are observations; x must match the
 * column count, which must match spec.p.
 *
 * @throws InputError on h <= 0 or any dimension mismatch.
 */
Eigen::VectorXd weight_vector(const Eigen::MatrixXd& X, const Eigen::VectorXd& x,
                              double h, const KernelSpec& spec);

// Rule-of-thumb bandwidth scale * n^(-1/(p+4)). Convenience only; every
// estimator takes the bandwidth explicitly.
double default_bandwidth(std::size_t n, int p, double scale = 1.0);

}  // namespace lppi
