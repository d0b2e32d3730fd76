#include "lppi/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lppi/errors.hpp"
#include "lppi/parallel.hpp"
#include "lppi/rng.hpp"
#include "lppi/special_functions.hpp"

namespace lppi {

namespace {

// Symmetrizes in place and rejects matrices that are not PSD up to rounding.
void finalize_covariance(Eigen::MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  double floor = -1e-8 * std::max(m.trace(), 1e-300);
  if (eig.eigenvalues().minCoeff() < floor)
    throw NumericError("covariance estimate lost positive semi-definiteness, smallest eigenvalue " +
                       std::to_string(eig.eigenvalues().minCoeff()));
}

std::vector<int> resample_indices(std::mt19937_64& rng, std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(uniform_index(rng, n));
  return idx;
}

void check_bias_bandwidth(const BiasTerms& bias, double fit_h) {
  if (std::fabs(bias.h - fit_h) > 1e-9 * std::max(1.0, std::fabs(fit_h)))
    throw InputError("bias terms were computed at bandwidth " + std::to_string(bias.h) +
                     " but the fit used " + std::to_string(fit_h));
}

}  // namespace

FitFunction make_conventional_fitter(double h, KernelSpec spec, SolveOptions opts) {
  return [h, spec, opts](const Dataset& labeled, const Dataset*, const Eigen::VectorXd& x) {
    return conventional_fit(labeled, x, h, spec, opts).theta();
  };
}

FitFunction make_ppi_fitter(double h, KernelSpec spec, SolveOptions opts) {
  return [h, spec, opts](const Dataset& labeled, const Dataset* unlabeled,
                         const Eigen::VectorXd& x) {
    if (unlabeled == nullptr)
      throw InputError("the prediction-powered fitter needs an unlabeled dataset");
    return ppi_fit(labeled, *unlabeled, x, h, spec, opts).theta();
  };
}

FitFunction make_hd_fitter(double h, KernelSpec spec, double t, SolveOptions opts) {
  return [h, spec, t, opts](const Dataset& labeled, const Dataset* unlabeled,
                            const Eigen::VectorXd& x) {
    if (unlabeled == nullptr)
      throw InputError("the high-dimensional fitter needs an unlabeled dataset");
    return hd_fit(labeled, *unlabeled, x, h, spec, t, opts).theta();
  };
}

CovarianceEstimate bootstrap_covariance(const FitFunction& fit_fn, const Dataset& labeled,
                                        const Dataset* unlabeled, const Eigen::VectorXd& x,
                                        int n_boot, std::uint64_t seed,
                                        const BootstrapOptions& opts) {
  if (n_boot < 2) throw InputError("bootstrap needs at least 2 replicates");
  if (labeled.rows() == 0) throw InputError("bootstrap needs a nonempty labeled dataset");
  const std::size_t n = labeled.rows();
  const std::size_t N = unlabeled != nullptr ? unlabeled->rows() : 0;
  const int dim = static_cast<int>(labeled.dim()) + 1;
  Eigen::MatrixXd draws(n_boot, dim);
  std::vector<char> ok(n_boot, 0);
  parallel_for(static_cast<std::size_t>(n_boot), resolve_jobs(opts.jobs), [&](std::size_t r) {
    auto rng_lab = substream({seed, r, 1});
    Dataset lab = take_rows(labeled, resample_indices(rng_lab, n));
    Dataset unl;
    if (unlabeled != nullptr) {
      auto rng_unl = substream({seed, r, 2});
      unl = take_rows(*unlabeled, resample_indices(rng_unl, N));
    }
    try {
      Eigen::VectorXd theta = fit_fn(lab, unlabeled != nullptr ? &unl : nullptr, x);
      if (theta.size() != dim)
        throw InputError("fit function returned " + std::to_string(theta.size()) +
                         " coefficients, expected " + std::to_string(dim));
      draws.row(static_cast<Eigen::Index>(r)) = theta.transpose();
      ok[r] = 1;
    } catch (const NumericError&) {
      // Degenerate resample; accounted for below.
    }
  });
  int n_ok = 0;
  for (char c : ok) n_ok += c;
  const int n_failed = n_boot - n_ok;
  if (n_ok < 2 || n_failed > opts.max_failure_fraction * n_boot)
    throw DegenerateResampling(n_failed, n_boot);
  Eigen::MatrixXd kept(n_ok, dim);
  int row = 0;
  for (int r = 0; r < n_boot; ++r)
    if (ok[r]) kept.row(row++) = draws.row(r);
  Eigen::RowVectorXd mean = kept.colwise().mean();
  Eigen::MatrixXd centered = kept.rowwise() - mean;
  CovarianceEstimate est;
  est.matrix = (centered.transpose() * centered) / (n_ok - 1);
  finalize_covariance(est.matrix);
  est.n_boot = n_boot;
  est.method = CovarianceMethod::bootstrap;
  est.n_failed = n_failed;
  return est;
}

CovarianceEstimate asymptotic_covariance_oracle(double sigma2, std::size_t n, double h,
                                                double density_at_x, const KernelSpec& spec) {
  if (sigma2 < 0.0) throw InputError("noise variance must be nonnegative");
  if (n == 0) throw InputError("sample size must be positive");
  if (h <= 0.0) throw InputError("bandwidth must be positive");
  if (density_at_x <= 0.0) throw InputError("density at the target must be positive");
  KernelMoments mom = compute_moments(spec);
  const double scale = sigma2 / (static_cast<double>(n) * std::pow(h, spec.p) * density_at_x);
  CovarianceEstimate est;
  est.matrix = Eigen::MatrixXd::Zero(spec.p + 1, spec.p + 1);
  est.matrix(0, 0) = scale * mom.j0;
  est.matrix.diagonal().tail(spec.p).setConstant(scale * mom.j2 / (mom.mu2 * mom.mu2 * h * h));
  est.n_boot = 0;
  est.method = CovarianceMethod::plugin_asymptotic;
  return est;
}

BiasTerms oracle_bias_terms(const Eigen::MatrixXd& hessian, double density,
                            const Eigen::VectorXd& density_grad, const KernelSpec& spec,
                            double h, BiasConvention convention) {
  const int p = spec.p;
  if (hessian.rows() != p || hessian.cols() != p || density_grad.size() != p)
    throw InputError("bias oracle dimension mismatch");
  if (density <= 0.0) throw InputError("density at the target must be positive");
  if (h <= 0.0) throw InputError("bandwidth must be positive");
  KernelMoments mom = compute_moments(spec);
  const double mu4 = fourth_marginal_moment(spec);
  const double trace = hessian.trace();
  BiasTerms bias;
  bias.b1 = convention == BiasConvention::proof_consistent
                ? 0.5 * mom.mu2 * trace
                : density * mom.mu2 * trace;
  // Leading gradient bias: the b1(m) vector of the expansion, third
  // derivative terms omitted to match what the plugin can estimate.
  Eigen::VectorXd b1m = 2.0 * mom.mu2 * mom.mu2 * (hessian * density_grad) +
                        (mu4 - 3.0 * mom.mu2 * mom.mu2) *
                            (hessian.diagonal().array() * density_grad.array()).matrix();
  bias.b2 = (h * h / (2.0 * mom.mu2 * density)) * b1m;
  bias.h = h;
  bias.source = BiasSource::oracle;
  bias.convention = convention;
  return bias;
}

BiasTerms plugin_bias_terms(const Dataset& labeled, const Eigen::VectorXd& x, double h,
                            const KernelSpec& spec, BiasConvention convention) {
  if (!labeled.has_labels()) throw InputError("bias plugin needs labels");
  if (h <= 0.0) throw InputError("bandwidth must be positive");
  const int p = spec.p;
  if (labeled.dim() != p || x.size() != p)
    throw InputError("bias plugin dimension mismatch");
  const std::size_t n = labeled.rows();
  Eigen::VectorXd w = weight_vector(labeled.features, x, h, spec);
  const double mass = w.sum();
  const double sq = w.squaredNorm();
  const double ess = sq > 0.0 ? mass * mass / sq : 0.0;
  const double needed = 0.5 * (p + 1) * (p + 2);
  if (ess < needed)
    throw PluginUnavailable("local quadratic fit needs effective sample size at least " +
                            std::to_string(needed) + ", found " + std::to_string(ess));
  const double hp = std::pow(h, p);
  const double density = mass / (static_cast<double>(n) * hp);
  // Density gradient from central differences of the kernel density estimate.
  const double step = 1e-3 * h;
  Eigen::VectorXd dens_grad(p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd lo = x, hi = x;
    hi[j] += step;
    lo[j] -= step;
    double f_hi = weight_vector(labeled.features, hi, h, spec).sum() / (n * hp);
    double f_lo = weight_vector(labeled.features, lo, h, spec).sum() / (n * hp);
    dens_grad[j] = (f_hi - f_lo) / (2.0 * step);
  }
  // Local quadratic fit with diagonal curvature: columns 1, u, u_j^2 / 2.
  const int q = 2 * p + 1;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd z(q);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[static_cast<Eigen::Index>(i)] == 0.0) continue;
    Eigen::VectorXd u = labeled.features.row(static_cast<Eigen::Index>(i)).transpose() - x;
    z[0] = 1.0;
    z.segment(1, p) = u;
    z.segment(1 + p, p) = 0.5 * u.array().square();
    double wi = w[static_cast<Eigen::Index>(i)];
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z, wi);
    rhs += wi * (*labeled.labels)[static_cast<Eigen::Index>(i)] * z;
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo_eig = eig.eigenvalues().minCoeff();
  const double hi_eig = eig.eigenvalues().maxCoeff();
  if (!(lo_eig > 0.0) || !(hi_eig / lo_eig <= 1e12))
    throw PluginUnavailable("local quadratic fit is singular at this target");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd coeffs = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !coeffs.allFinite())
    throw PluginUnavailable("local quadratic fit failed to solve at this target");
  Eigen::VectorXd curvature = coeffs.segment(1 + p, p);
  const double trace = curvature.sum();
  KernelMoments mom = compute_moments(spec);
  const double mu4 = fourth_marginal_moment(spec);
  BiasTerms bias;
  bias.b1 = convention == BiasConvention::proof_consistent
                ? 0.5 * mom.mu2 * trace
                : density * mom.mu2 * trace;
  // Diagonal-only reading of the oracle formula: H grad f collapses to
  // elementwise curvature times density slope.
  bias.b2 = (h * h * (mu4 - mom.mu2 * mom.mu2) / (2.0 * mom.mu2 * density)) *
            (curvature.array() * dens_grad.array()).matrix();
  bias.h = h;
  bias.source = BiasSource::plugin;
  bias.convention = convention;
  return bias;
}

ConfidenceInterval ci_value(const LocalFit& fit, const CovarianceEstimate& cov, double alpha,
                            const std::optional<BiasTerms>& bias) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie strictly in (0, 1)");
  if (cov.matrix.rows() < 1 || cov.matrix.cols() < 1)
    throw InputError("covariance estimate is empty");
  double variance = cov.matrix(0, 0);
  if (variance < 0.0) {
    if (variance < -1e-10 * std::max(1.0, cov.matrix.trace()))
      throw NumericError("negative variance for the function value: " + std::to_string(variance));
    variance = 0.0;
  }
  ConfidenceInterval ci;
  ci.alpha = alpha;
  ci.center = fit.m_hat;
  if (bias.has_value()) {
    check_bias_bandwidth(*bias, fit.h);
    ci.center -= bias->h * bias->h * bias->b1;
    ci.bias_corrected = true;
  }
  const double se = std::sqrt(variance);
  if (se == 0.0) {
    ci.degenerate = true;
    ci.lower = ci.upper = ci.center;
    return ci;
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  ci.lower = ci.center - z * se;
  ci.upper = ci.center + z * se;
  return ci;
}

ConfidenceRegion region_gradient(const LocalFit& fit, const Eigen::MatrixXd& cov_grad,
                                 double alpha, const std::optional<BiasTerms>& bias) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie strictly in (0, 1)");
  const int p = static_cast<int>(fit.grad_hat.size());
  if (cov_grad.rows() != p || cov_grad.cols() != p)
    throw InputError("gradient covariance must be " + std::to_string(p) + " x " +
                     std::to_string(p));
  Eigen::MatrixXd sym = 0.5 * (cov_grad + cov_grad.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    throw NumericError("gradient covariance is not positive definite; smallest eigenvalue " +
                       std::to_string(eig.eigenvalues().minCoeff()));
  ConfidenceRegion region;
  region.shape = eig.eigenvectors() *
                 eig.eigenvalues().cwiseInverse().asDiagonal() *
                 eig.eigenvectors().transpose();
  region.shape = 0.5 * (region.shape + region.shape.transpose()).eval();
  region.radius_sq = chi_square_quantile(1.0 - alpha, p);
  region.alpha = alpha;
  region.center = fit.grad_hat;
  if (bias.has_value()) {
    check_bias_bandwidth(*bias, fit.h);
    if (bias->b2.size() != p) throw InputError("bias terms cover a different dimension");
    region.center -= bias->b2;
    region.bias_shift = bias->b2;
  }
  return region;
}

bool region_contains(const ConfidenceRegion& region, const Eigen::VectorXd& v) {
  if (v.size() != region.center.size())
    throw InputError("membership test dimension mismatch");
  Eigen::VectorXd u = v - region.center;
  return u.dot(region.shape * u) <= region.radius_sq;
}

double theoretical_coverage_single(double alpha, double h, double sigma11, double b1) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie strictly in (0, 1)");
  if (!(sigma11 > 0.0)) throw InputError("sigma11 must be positive");
  if (h < 0.0) throw InputError("bandwidth must be nonnegative");
  const double h4 = h * h * h * h;
  return (1.0 - alpha) * (1.0 - h4 * b1 * b1 / (8.0 * sigma11 * sigma11));
}

double coverage_c1(double alpha, int p) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie strictly in (0, 1)");
  if (p < 1) throw InputError("dimension must be at least 1");
  const double q_p = chi_square_quantile(1.0 - alpha, p);
  const double q_p2 = chi_square_quantile(1.0 - alpha, p + 2);
  return chi_square_cdf(q_p2, p + 2) - chi_square_cdf(q_p, p + 2);
}

double theoretical_coverage_multi(double alpha, int p, const Eigen::VectorXd& b) {
  const double c1 = coverage_c1(alpha, p);  // validates alpha and p
  if (b.size() != p) throw InputError("bias vector must have length " + std::to_string(p));
  return (1.0 - alpha) * (1.0 + (0.5 - c1) * b.squaredNorm());
}

}  // namespace lppi
