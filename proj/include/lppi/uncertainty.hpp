#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "lppi/dataset.hpp"
#include "lppi/estimators.hpp"
#include "lppi/kernels.hpp"

namespace lppi {

enum class CovarianceMethod { bootstrap, plugin_asymptotic };

// Covariance of the stacked estimate (value, gradient). Builders symmetrize
// the matrix and enforce positive semi-definiteness up to rounding.
struct CovarianceEstimate {
  Eigen::MatrixXd matrix;  // (p + 1) x (p + 1)
  int n_boot = 0;
  CovarianceMethod method = CovarianceMethod::bootstrap;
  int n_failed = 0;  // degenerate replicates dropped along the way
};

// An estimator curried down to (labeled, unlabeled, target) -> theta.
// The unlabeled pointer may be null for estimators that ignore it.
using FitFunction = std::function<Eigen::VectorXd(
    const Dataset& labeled, const Dataset* unlabeled, const Eigen::VectorXd& x)>;

FitFunction make_conventional_fitter(double h, KernelSpec spec, SolveOptions opts = {});
FitFunction make_ppi_fitter(double h, KernelSpec spec, SolveOptions opts = {});
FitFunction make_hd_fitter(double h, KernelSpec spec, double t, SolveOptions opts = {});

struct BootstrapOptions {
  int jobs = 1;                        // worker threads; never changes the result
  double max_failure_fraction = 0.2;   // abort threshold for degenerate replicates
};

/**
 * @brief Bootstrap covariance of an estimator at one target point.
 *
 * Each replicate resamples the labeled rows (and the unlabeled rows, when
 * present) with replacement, independently of each other and of every other
 * replicate, then refits. Failed replicates are dropped and counted.
 *
 * @throws DegenerateResampling when more than max_failure_fraction of the
 *         replicates fail, or fewer than two succeed.
 */
CovarianceEstimate bootstrap_covariance(const FitFunction& fit_fn, const Dataset& labeled,
                                        const Dataset* unlabeled, const Eigen::VectorXd& x,
                                        int n_boot, std::uint64_t seed,
                                        const BootstrapOptions& opts = {});

// Closed-form asymptotic covariance diag(J0, J2 / (mu2^2 h^2) I_p) scaled by
// sigma^2 / (n h^p f(x)). Needs the true density and noise variance, so it
// serves as a simulation-mode cross-check, not a production estimate.
CovarianceEstimate asymptotic_covariance_oracle(double sigma2, std::size_t n, double h,
                                                double density_at_x, const KernelSpec& spec);

// Two readings of the leading value-bias coefficient; see the README for
// why both exist. proof_consistent is the default everywhere.
enum class BiasConvention { proof_consistent, theorem_literal };

enum class BiasSource { oracle, plugin };

// Leading bias of the estimate at bandwidth h. b1 is a coefficient, the
// value shift is h^2 * b1; b2 is the gradient shift itself, h^2 included.
struct BiasTerms {
  double b1 = 0.0;
  Eigen::VectorXd b2;
  double h = 0.0;
  BiasSource source = BiasSource::plugin;
  BiasConvention convention = BiasConvention::proof_consistent;
};

// Assembles the bias terms from known curvature: the Hessian of m, the
// density, and its gradient at the target. Third-derivative contributions
// are omitted on both the oracle and plugin paths so the two stay comparable.
BiasTerms oracle_bias_terms(const Eigen::MatrixXd& hessian, double density,
                            const Eigen::VectorXd& density_grad, const KernelSpec& spec,
                            double h,
                            BiasConvention convention = BiasConvention::proof_consistent);

/**
 * @brief Estimates the bias terms from the labeled data alone.
 *
 * The density comes from a kernel density estimate with the same kernel and
 * bandwidth, its gradient from central differences of that estimate, and the
 * curvature from the diagonal of a local quadratic fit. Off-diagonal
 * curvature is not estimated; the oracle path carries the full Hessian.
 *
 * @throws PluginUnavailable when the neighborhood is too thin to support a
 *         quadratic fit (effective sample size below (p+1)(p+2)/2) or the
 *         fit is singular. Callers fall back to uncorrected sets.
 */
BiasTerms plugin_bias_terms(const Dataset& labeled, const Eigen::VectorXd& x, double h,
                            const KernelSpec& spec,
                            BiasConvention convention = BiasConvention::proof_consistent);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  bool bias_corrected = false;
  double center = 0.0;
  bool degenerate = false;  // zero variance: lower == upper == center
};

/**
 * @brief Two-sided normal interval for the function value.
 *
 * Without bias terms the interval is centered at m_hat with half-width
 * z_{1-alpha/2} sqrt(cov[0,0]); with them the center shifts by -h^2 b1.
 *
 * @throws InputError when the bias terms were computed at a different
 *         bandwidth than the fit.
 */
ConfidenceInterval ci_value(const LocalFit& fit, const CovarianceEstimate& cov, double alpha,
                            const std::optional<BiasTerms>& bias = std::nullopt);

// Ellipsoidal confidence set for the gradient. center already includes the
// bias correction when one was applied; bias_shift records the subtracted b2.
struct ConfidenceRegion {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;  // inverse of the gradient covariance block
  double radius_sq = 0.0;
  double alpha = 0.0;
  std::optional<Eigen::VectorXd> bias_shift;
};

/**
 * @brief Confidence region {v : (v - center)' shape (v - center) <= radius_sq}
 * with radius_sq the 1-alpha chi-square quantile at p degrees of freedom.
 *
 * @param cov_grad the p x p covariance of the gradient block alone.
 * @throws NumericError when cov_grad is not positive definite; the message
 *         reports the smallest eigenvalue.
 */
ConfidenceRegion region_gradient(const LocalFit& fit, const Eigen::MatrixXd& cov_grad,
                                 double alpha,
                                 const std::optional<BiasTerms>& bias = std::nullopt);

bool region_contains(const ConfidenceRegion& region, const Eigen::VectorXd& v);

// Leading-order coverage of the uncorrected interval under bias coefficient
// b1: (1 - alpha) (1 - h^4 b1^2 / (8 sigma11^2)). Exactly 1 - alpha at b1 = 0.
double theoretical_coverage_single(double alpha, double h, double sigma11, double b1);

// Mass the chi-square density with p + 2 degrees of freedom carries between
// the chi-square(p) and chi-square(p + 2) quantiles at level 1 - alpha. Lies
// strictly in (0, 1) for every p >= 1.
double coverage_c1(double alpha, int p);

// Multivariate analogue (1 - alpha) (1 + (1/2 - c1) sum b_i^2), where c1 is
// the mass the chi-square density with p + 2 degrees of freedom puts between
// the p and p + 2 quantiles at level 1 - alpha.
double theoretical_coverage_multi(double alpha, int p, const Eigen::VectorXd& b);

}  // namespace lppi
