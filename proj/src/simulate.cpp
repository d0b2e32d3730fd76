#include "lppi/simulate.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lppi/errors.hpp"
#include "lppi/rng.hpp"

namespace lppi {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_point(const Eigen::VectorXd& x) {
  if (x.size() != SimulationSpec::dim)
    throw InputError("simulation point has dimension " + std::to_string(x.size()) +
                     ", expected " + std::to_string(SimulationSpec::dim));
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double simulate_m(const Eigen::VectorXd& x) {
  check_point(x);
  double nonsmooth = std::fabs(x[0] * x[1]);
  double oscillatory =
      x[2] <= 0.0 ? x[2] * std::cos(kPi * x[2]) : std::sin(kPi * x[2]);
  double linear = -x[3] - 0.5 * x[4] + 0.5 * x[5] + x[6];
  return nonsmooth + oscillatory + linear;
}

Eigen::VectorXd simulate_gradient(const Eigen::VectorXd& x) {
  check_point(x);
  if (x[0] * x[1] == 0.0)
    throw NondifferentiablePoint(x[0] == 0.0 ? 1 : 2, "|x1 x2| has a kink where x1 x2 = 0");
  if (x[2] == 0.0)
    throw NondifferentiablePoint(3, "the x3 piece switches branch at x3 = 0");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(SimulationSpec::dim);
  double s = sign(x[0] * x[1]);
  g[0] = s * x[1];
  g[1] = s * x[0];
  g[2] = x[2] < 0.0 ? std::cos(kPi * x[2]) - kPi * x[2] * std::sin(kPi * x[2])
                    : kPi * std::cos(kPi * x[2]);
  g[3] = -1.0;
  g[4] = -0.5;
  g[5] = 0.5;
  g[6] = 1.0;
  return g;
}

double simulate_hessian_trace(const Eigen::VectorXd& x) {
  check_point(x);
  // |x1 x2| contributes no diagonal curvature away from its kink and the
  // linear block none at all, so the trace is the second x3 derivative.
  return x[2] <= 0.0
             ? -2.0 * kPi * std::sin(kPi * x[2]) - kPi * kPi * x[2] * std::cos(kPi * x[2])
             : -kPi * kPi * std::sin(kPi * x[2]);
}

Eigen::MatrixXd simulate_hessian(const Eigen::VectorXd& x) {
  check_point(x);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(SimulationSpec::dim, SimulationSpec::dim);
  double s = sign(x[0] * x[1]);
  H(0, 1) = s;
  H(1, 0) = s;
  H(2, 2) = simulate_hessian_trace(x);
  return H;
}

SimulationDraw generate(const SimulationSpec& spec) {
  if (spec.n_labeled == 0) throw InputError("simulation needs at least one labeled row");
  if (spec.noise_sd < 0.0) throw InputError("noise standard deviation must be nonnegative");

  SimulationDraw draw;
  const int p = SimulationSpec::dim;
  // Separate substreams for features and noise keep the feature draw
  // identical when only the noise level changes.
  std::mt19937_64 feat_rng = substream({spec.seed, 0x11});
  std::mt19937_64 noise_rng = substream({spec.seed, 0x22});
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto fill = [&](Dataset& ds, std::size_t n, bool labeled, Eigen::VectorXd& truth_m,
                  Eigen::MatrixXd& truth_grad) {
    ds.features.resize(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
      for (int j = 0; j < p; ++j) ds.features(i, j) = gauss(feat_rng);
    truth_m.resize(static_cast<Eigen::Index>(n));
    truth_grad.resize(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
      Eigen::VectorXd x = ds.features.row(i).transpose();
      truth_m[i] = simulate_m(x);
      // Standard normal rows dodge the kink set almost surely; fall back to
      // zero rather than failing a bulk draw in the measure-zero case.
      try {
        truth_grad.row(i) = simulate_gradient(x).transpose();
      } catch (const NondifferentiablePoint&) {
        truth_grad.row(i).setZero();
      }
    }
    if (labeled) {
      Eigen::VectorXd y(truth_m.size());
      for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] = truth_m[i] + spec.noise_sd * gauss(noise_rng);
      ds.labels = std::move(y);
    }
  };

  fill(draw.labeled, spec.n_labeled, true, draw.truth_labeled_m, draw.truth_labeled_grad);
  fill(draw.unlabeled, spec.n_unlabeled, false, draw.truth_unlabeled_m,
       draw.truth_unlabeled_grad);
  draw.labeled.provenance = "sim:" + std::to_string(spec.seed) + ":labeled";
  draw.unlabeled.provenance = "sim:" + std::to_string(spec.seed) + ":unlabeled";
  return draw;
}

}  // namespace lppi
