#include "lppi/kernels.hpp"

#include <cmath>

#include "lppi/errors.hpp"

namespace lppi {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_dim(const KernelSpec& spec) {
  if (spec.p < 1) throw InputError("kernel dimension must be at least 1");
}

// Surface area of the unit sphere in R^p, S_{p-1} = 2 pi^(p/2) / Gamma(p/2).
double sphere_surface(int p) {
  return 2.0 * std::pow(kPi, 0.5 * p) / std::tgamma(0.5 * p);
}

// Normalizer of the spherical Epanechnikov kernel c_p (1 - |u|^2)_+,
// c_p = p (p + 2) / (2 S_{p-1}).
double epanechnikov_norm(int p) {
  return p * (p + 2.0) / (2.0 * sphere_surface(p));
}

double eval_from_sqnorm(const KernelSpec& spec, double r2) {
  switch (spec.family) {
    case KernelFamily::gaussian:
      return std::pow(2.0 * kPi, -0.5 * spec.p) * std::exp(-0.5 * r2);
    case KernelFamily::epanechnikov:
      if (r2 >= 1.0) return 0.0;
      return epanechnikov_norm(spec.p) * (1.0 - r2);
  }
  throw InputError("unknown kernel family");
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& u) {
  check_dim(spec);
  if (u.size() != spec.p)
    throw InputError("kernel argument has dimension " + std::to_string(u.size()) +
                     ", expected " + std::to_string(spec.p));
  return eval_from_sqnorm(spec, u.squaredNorm());
}

double kernel_max(const KernelSpec& spec) {
  check_dim(spec);
  return eval_from_sqnorm(spec, 0.0);
}

KernelMoments compute_moments(const KernelSpec& spec) {
  check_dim(spec);
  KernelMoments m;
  m.p = spec.p;
  double p = spec.p;
  switch (spec.family) {
    case KernelFamily::gaussian:
      // K^2 is (4 pi)^(-p/2) times the N(0, I/2) density, hence the 1/2 in j2.
      m.mu2 = 1.0;
      m.j0 = std::pow(4.0 * kPi, -0.5 * p);
      m.j2 = 0.5 * m.j0;
      return m;
    case KernelFamily::epanechnikov: {
      double s = sphere_surface(spec.p);
      m.mu2 = 1.0 / (p + 4.0);
      m.j0 = 2.0 * p * (p + 2.0) / (s * (p + 4.0));
      m.j2 = m.j0 / (p + 6.0);
      return m;
    }
  }
  throw InputError("unknown kernel family");
}

double fourth_marginal_moment(const KernelSpec& spec) {
  check_dim(spec);
  double p = spec.p;
  switch (spec.family) {
    case KernelFamily::gaussian:
      return 3.0;
    case KernelFamily::epanechnikov:
      return 3.0 / ((p + 4.0) * (p + 6.0));
  }
  throw InputError("unknown kernel family");
}

Eigen::VectorXd weight_vector(const Eigen::MatrixXd& X, const Eigen::VectorXd& x,
                              double h, const KernelSpec& spec) {
  check_dim(spec);
  if (h <= 0.0) throw InputError("bandwidth must be positive, got " + std::to_string(h));
  if (X.cols() != spec.p || x.size() != spec.p)
    throw InputError("weight_vector dimension mismatch: X has " + std::to_string(X.cols()) +
                     " columns, target has " + std::to_string(x.size()) +
                     ", kernel expects " + std::to_string(spec.p));
  const double inv_h2 = 1.0 / (h * h);
  Eigen::VectorXd w(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double r2 = (X.row(i).transpose() - x).squaredNorm() * inv_h2;
    w[i] = eval_from_sqnorm(spec, r2);
  }
  return w;
}

double default_bandwidth(std::size_t n, int p, double scale) {
  if (n < 2) throw InputError("bandwidth rule needs at least 2 samples");
  if (p < 1) throw InputError("bandwidth rule needs dimension at least 1");
  if (scale <= 0.0) throw InputError("bandwidth scale must be positive");
  return scale * std::pow(static_cast<double>(n), -1.0 / (p + 4.0));
}

}  // namespace lppi
