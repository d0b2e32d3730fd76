#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>

#include "lppi/dataset.hpp"

namespace lppi {

// Synthetic benchmark in ten dimensions. Features are standard normal,
// labels are m(X) plus centered gaussian noise, and the last three
// coordinates never enter m, so they act as pure distractors.
struct SimulationSpec {
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  double noise_sd = 0.4472135954999579;  // sqrt(0.2)
  std::uint64_t seed = 0;
  static constexpr int dim = 10;
};

// m(x) = |x1 x2|
//      + x3 cos(pi x3)      if x3 <= 0,   sin(pi x3) otherwise
//      - x4 - 0.5 x5 + 0.5 x6 + x7.
double simulate_m(const Eigen::VectorXd& x);

// Analytic gradient of simulate_m.
// @throws NondifferentiablePoint at x1 x2 = 0 or x3 = 0, naming the coordinate.
Eigen::VectorXd simulate_gradient(const Eigen::VectorXd& x);

// Trace of the Hessian of simulate_m. Away from the kink set the only
// nonzero diagonal entry comes from the x3 piece.
double simulate_hessian_trace(const Eigen::VectorXd& x);

// Full Hessian; the x1 x2 piece contributes the off-diagonal sign(x1 x2).
Eigen::MatrixXd simulate_hessian(const Eigen::VectorXd& x);

struct SimulationDraw {
  Dataset labeled;    // features plus noisy labels
  Dataset unlabeled;  // features only
  Eigen::VectorXd truth_labeled_m;
  Eigen::VectorXd truth_unlabeled_m;
  Eigen::MatrixXd truth_labeled_grad;
  Eigen::MatrixXd truth_unlabeled_grad;
};

// Draws both datasets. The same seed reproduces the draw bit for bit;
// the truth columns exist for evaluation only and must never feed a fit.
SimulationDraw generate(const SimulationSpec& spec);

}  // namespace lppi
