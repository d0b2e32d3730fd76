#include "lppi/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lppi/errors.hpp"

namespace lppi {

namespace {

void check_inputs(const Dataset& ds, const Eigen::VectorXd& x, double h,
                  const KernelSpec& spec, const char* what) {
  if (h <= 0.0)
    throw InputError(std::string(what) + ": bandwidth must be positive, got " +
                     std::to_string(h));
  if (ds.dim() != spec.p || x.size() != spec.p)
    throw InputError(std::string(what) + ": dimension mismatch (data " +
                     std::to_string(ds.dim()) + ", target " + std::to_string(x.size()) +
                     ", kernel " + std::to_string(spec.p) + ")");
  if (ds.rows() == 0) throw InputError(std::string(what) + ": dataset is empty");
}

// One pass over the rows: weighted Gram of the augmented design
// a_i = (1, X_i - x) and, when v is given, the weighted right-hand side
// sum_i w_i v_i a_i. Only the lower triangle of the Gram is accumulated.
struct GramSystem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  double mass = 0.0;
};

GramSystem accumulate(const Eigen::MatrixXd& X, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& w, const Eigen::VectorXd* v) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  GramSystem sys;
  sys.gram = Eigen::MatrixXd::Zero(p + 1, p + 1);
  sys.rhs = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd d(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    sys.mass += wi;
    d = X.row(i).transpose() - x;
    sys.gram(0, 0) += wi;
    sys.gram.block(1, 0, p, 1) += wi * d;
    sys.gram.block(1, 1, p, p).selfadjointView<Eigen::Lower>().rankUpdate(d, wi);
    if (v) {
      const double wv = wi * (*v)[i];
      sys.rhs[0] += wv;
      sys.rhs.tail(p) += wv * d;
    }
  }
  sys.gram.triangularView<Eigen::Upper>() = sys.gram.transpose();
  return sys;
}

// Condition estimate of a symmetric PSD matrix from its eigenvalues.
double condition_of(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (hi <= 0.0 || lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Factorize-and-solve with the condition gate in front. Pivoted QR is the
// fallback when the LDLT factorization reports trouble.
Eigen::VectorXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                           const SolveOptions& opts, const char* where) {
  double cond = condition_of(gram);
  if (!(cond <= opts.condition_limit)) throw SingularDesign(cond, where);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() == Eigen::Success) return ldlt.solve(rhs);
  return gram.colPivHouseholderQr().solve(rhs);
}

LocalFit fit_from_theta(const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                        FitMethod method, double mass, double h) {
  LocalFit fit;
  fit.m_hat = theta[0];
  fit.grad_hat = theta.tail(theta.size() - 1);
  fit.target = x;
  fit.method = method;
  fit.effective_weight_mass = mass;
  fit.h = h;
  return fit;
}

}  // namespace

LocalFit conventional_fit(const Dataset& labeled, const Eigen::VectorXd& x, double h,
                          const KernelSpec& spec, const SolveOptions& opts) {
  check_inputs(labeled, x, h, spec, "conventional_fit");
  if (!labeled.has_labels()) throw InputError("conventional_fit: labeled dataset has no labels");
  Eigen::VectorXd w = weight_vector(labeled.features, x, h, spec);
  GramSystem sys = accumulate(labeled.features, x, w, &*labeled.labels);
  if (sys.mass < opts.min_weight_mass) throw EmptyNeighborhood(sys.mass);
  Eigen::VectorXd theta = solve_gram(sys.gram, sys.rhs, opts, "labeled design");
  return fit_from_theta(theta, x, FitMethod::conventional, sys.mass, h);
}

Rectifier compute_rectifier(const Dataset& labeled, const Eigen::VectorXd& x, double h,
                            const KernelSpec& spec, const SolveOptions& opts) {
  check_inputs(labeled, x, h, spec, "compute_rectifier");
  if (!labeled.has_labels()) throw InputError("compute_rectifier: labeled dataset has no labels");
  if (!labeled.has_predictions())
    throw InputError("compute_rectifier: labeled dataset has no predictions");
  Eigen::VectorXd w = weight_vector(labeled.features, x, h, spec);
  Eigen::VectorXd resid = *labeled.predictions - *labeled.labels;
  GramSystem sys = accumulate(labeled.features, x, w, &resid);
  if (sys.mass < opts.min_weight_mass) throw EmptyNeighborhood(sys.mass);
  Rectifier rect;
  rect.delta = solve_gram(sys.gram, sys.rhs, opts, "labeled design");
  rect.n_used = labeled.rows();
  return rect;
}

LocalFit ppi_fit(const Dataset& labeled, const Dataset& unlabeled, const Eigen::VectorXd& x,
                 double h, const KernelSpec& spec, const SolveOptions& opts) {
  check_inputs(unlabeled, x, h, spec, "ppi_fit");
  if (!unlabeled.has_predictions())
    throw InputError("ppi_fit: unlabeled dataset has no predictions");
  Eigen::VectorXd w = weight_vector(unlabeled.features, x, h, spec);
  GramSystem sys = accumulate(unlabeled.features, x, w, &*unlabeled.predictions);
  if (sys.mass < opts.min_weight_mass) throw EmptyNeighborhood(sys.mass);
  Eigen::VectorXd pseudo = solve_gram(sys.gram, sys.rhs, opts, "unlabeled design");
  Rectifier rect = compute_rectifier(labeled, x, h, spec, opts);
  return fit_from_theta(pseudo - rect.delta, x, FitMethod::ppi, sys.mass, h);
}

Rectifier hd_rectifier(const Dataset& labeled, const Dataset& unlabeled,
                       const Eigen::VectorXd& x, double h, const KernelSpec& spec, double t,
                       const SolveOptions& opts) {
  check_inputs(labeled, x, h, spec, "hd_rectifier");
  check_inputs(unlabeled, x, h, spec, "hd_rectifier");
  if (t <= 0.0)
    throw InputError("hd_rectifier: regularization weight must be positive, got " +
                     std::to_string(t));
  if (!labeled.has_labels()) throw InputError("hd_rectifier: labeled dataset has no labels");
  if (!labeled.has_predictions())
    throw InputError("hd_rectifier: labeled dataset has no predictions");

  Eigen::VectorXd w_lab = weight_vector(labeled.features, x, h, spec);
  Eigen::VectorXd resid = *labeled.predictions - *labeled.labels;
  GramSystem lab = accumulate(labeled.features, x, w_lab, &resid);
  Eigen::VectorXd w_unl = weight_vector(unlabeled.features, x, h, spec);
  GramSystem unl = accumulate(unlabeled.features, x, w_unl, nullptr);

  double mass = lab.mass + t * unl.mass;
  if (mass < opts.min_weight_mass) throw EmptyNeighborhood(mass);

  Eigen::MatrixXd reg = lab.gram + t * unl.gram;
  const double scale =
      1.0 + t * static_cast<double>(unlabeled.rows()) / static_cast<double>(labeled.rows());
  Rectifier rect;
  rect.delta = scale * solve_gram(reg, lab.rhs, opts, "regularized design");
  rect.n_used = labeled.rows();
  rect.t = t;
  return rect;
}

LocalFit hd_fit(const Dataset& labeled, const Dataset& unlabeled, const Eigen::VectorXd& x,
                double h, const KernelSpec& spec, double t, const SolveOptions& opts) {
  check_inputs(unlabeled, x, h, spec, "hd_fit");
  if (!unlabeled.has_predictions())
    throw InputError("hd_fit: unlabeled dataset has no predictions");
  Eigen::VectorXd w = weight_vector(unlabeled.features, x, h, spec);
  GramSystem sys = accumulate(unlabeled.features, x, w, &*unlabeled.predictions);
  if (sys.mass < opts.min_weight_mass) throw EmptyNeighborhood(sys.mass);
  Eigen::VectorXd pseudo = solve_gram(sys.gram, sys.rhs, opts, "unlabeled design");
  Rectifier rect = hd_rectifier(labeled, unlabeled, x, h, spec, t, opts);
  return fit_from_theta(pseudo - rect.delta, x, FitMethod::ppi_hd, sys.mass, h);
}

double default_hd_t(std::size_t n_labeled, std::size_t n_unlabeled) {
  if (n_labeled == 0 || n_unlabeled == 0)
    throw InputError("default_hd_t needs nonempty labeled and unlabeled sets");
  return 0.01 * static_cast<double>(n_labeled) / static_cast<double>(n_unlabeled);
}

}  // namespace lppi
