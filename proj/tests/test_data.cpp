#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "lppi/csv.hpp"
#include "lppi/errors.hpp"
#include "lppi/pca.hpp"
#include "lppi/simulate.hpp"
#include "test_util.hpp"

using namespace lppi;

namespace {

Eigen::VectorXd point(std::initializer_list<double> head) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  int i = 0;
  for (double v : head) x[i++] = v;
  return x;
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/lppi_test_") + name;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("benchmark mean function at hand-computed points") {
  // Only the product piece: x3 = 0 takes the x3 cos branch, which is zero.
  CHECK(simulate_m(point({1.0, 1.0})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(simulate_m(point({-2.0, 1.5})) == doctest::Approx(3.0).epsilon(1e-12));
  // Oscillatory piece on both branches.
  CHECK(simulate_m(point({0.0, 0.0, -1.0})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(simulate_m(point({0.0, 0.0, 0.5})) == doctest::Approx(1.0).epsilon(1e-12));
  // Linear block: coefficients (-1, -1/2, 1/2, 1) on x4..x7.
  CHECK(simulate_m(point({0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0})) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(simulate_m(point({0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0})) ==
        doctest::Approx(-2.0).epsilon(1e-12));
  // Distractor coordinates x8..x10 never enter.
  Eigen::VectorXd x = point({1.0, 2.0, -0.5, 1.0, 1.0, 1.0, 1.0});
  Eigen::VectorXd xd = x;
  xd[7] = 5.0;
  xd[8] = -3.0;
  xd[9] = 11.0;
  CHECK(simulate_m(x) == doctest::Approx(simulate_m(xd)).epsilon(1e-15));
}

TEST_CASE("analytic gradient agrees with central differences") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double fd_h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(10);
    for (int j = 0; j < 10; ++j) x[j] = gauss(rng);
    // Keep clear of the kink set so both sided evaluations share a branch.
    if (std::fabs(x[0]) < 1e-2 || std::fabs(x[1]) < 1e-2 || std::fabs(x[2]) < 1e-2) continue;
    Eigen::VectorXd g = simulate_gradient(x);
    for (int j = 0; j < 10; ++j) {
      Eigen::VectorXd hi = x, lo = x;
      hi[j] += fd_h;
      lo[j] -= fd_h;
      double fd = (simulate_m(hi) - simulate_m(lo)) / (2.0 * fd_h);
      CHECK(std::fabs(g[j] - fd) < 1e-5);
    }
  }
}

TEST_CASE("gradient names the offending coordinate at kinks") {
  try {
    simulate_gradient(point({0.0, 1.0, 0.5}));
    FAIL("expected NondifferentiablePoint");
  } catch (const NondifferentiablePoint& e) {
    CHECK(e.coordinate() == 1);
  }
  try {
    simulate_gradient(point({1.0, 0.0, 0.5}));
    FAIL("expected NondifferentiablePoint");
  } catch (const NondifferentiablePoint& e) {
    CHECK(e.coordinate() == 2);
  }
  try {
    simulate_gradient(point({1.0, 1.0, 0.0}));
    FAIL("expected NondifferentiablePoint");
  } catch (const NondifferentiablePoint& e) {
    CHECK(e.coordinate() == 3);
  }
}

TEST_CASE("hessian trace agrees with differenced gradients") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double fd_h = 1e-4;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(10);
    for (int j = 0; j < 10; ++j) x[j] = gauss(rng);
    if (std::fabs(x[0]) < 0.05 || std::fabs(x[1]) < 0.05 || std::fabs(x[2]) < 0.05) continue;
    double tr = 0.0;
    for (int j = 0; j < 10; ++j) {
      Eigen::VectorXd hi = x, lo = x;
      hi[j] += fd_h;
      lo[j] -= fd_h;
      tr += (simulate_gradient(hi)[j] - simulate_gradient(lo)[j]) / (2.0 * fd_h);
    }
    CHECK(std::fabs(simulate_hessian_trace(x) - tr) < 1e-4);
    Eigen::MatrixXd H = simulate_hessian(x);
    CHECK(std::fabs(H.trace() - tr) < 1e-4);
    CHECK(H(0, 1) == doctest::Approx(x[0] * x[1] > 0 ? 1.0 : -1.0).epsilon(1e-12));
  }
}

TEST_CASE("generator reproduces bit for bit under the same seed") {
  SimulationSpec spec;
  spec.n_labeled = 500;
  spec.n_unlabeled = 300;
  spec.seed = 99;
  SimulationDraw a = generate(spec);
  SimulationDraw b = generate(spec);
  CHECK((a.labeled.features - b.labeled.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK((*a.labeled.labels - *b.labeled.labels).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.unlabeled.features - b.unlabeled.features).cwiseAbs().maxCoeff() == 0.0);
  spec.seed = 100;
  SimulationDraw c = generate(spec);
  CHECK((a.labeled.features - c.labeled.features).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generator moments at scale") {
  SimulationSpec spec;
  spec.n_labeled = 100000;
  spec.n_unlabeled = 1;
  spec.seed = 7;
  SimulationDraw draw = generate(spec);
  const Eigen::VectorXd& y = *draw.labeled.labels;
  Eigen::VectorXd resid = y - draw.truth_labeled_m;
  double rmean = resid.mean();
  double rvar = (resid.array() - rmean).square().sum() / (resid.size() - 1);
  CHECK(std::fabs(rmean) < 0.005);
  CHECK(rvar == doctest::Approx(0.2).epsilon(0.05));
  // Population variance of the labels: 0.595 from |x1 x2|, about 0.455
  // from the oscillatory piece, 2.5 from the linear block, 0.2 noise.
  double ymean = y.mean();
  double yvar = (y.array() - ymean).square().sum() / (y.size() - 1);
  CHECK(yvar == doctest::Approx(3.745).epsilon(0.03));
  CHECK(!draw.unlabeled.has_labels());
  CHECK(draw.labeled.provenance != draw.unlabeled.provenance);
}

TEST_CASE("take_rows keeps columns aligned through duplicates") {
  Dataset ds;
  ds.features.resize(4, 2);
  ds.features << 1, 2, 3, 4, 5, 6, 7, 8;
  ds.labels = Eigen::Vector4d(10, 20, 30, 40);
  ds.predictions = Eigen::Vector4d(-1, -2, -3, -4);
  Dataset picked = take_rows(ds, {3, 0, 3});
  CHECK(picked.rows() == 3);
  CHECK(picked.features(0, 0) == 7);
  CHECK((*picked.labels)[0] == 40);
  CHECK((*picked.predictions)[0] == -4);
  CHECK((*picked.labels)[1] == 10);
  CHECK((*picked.labels)[2] == 40);
  CHECK_THROWS_AS(take_rows(ds, {4}), InputError);
}

TEST_CASE("csv round trip is exact") {
  std::string path = temp_path("roundtrip.csv");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd table(20, 3);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j) table(i, j) = gauss(rng) * std::pow(10.0, j - 1);
  write_csv(path, {"a", "b", "y"}, table);
  CsvSchema schema;
  schema.feature_columns = {"a", "b"};
  schema.label_column = "y";
  LoadReport loaded = load_csv(path, schema);
  CHECK(loaded.dropped_rows == 0);
  CHECK(loaded.dataset.rows() == 20);
  CHECK((loaded.dataset.features - table.leftCols(2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((*loaded.dataset.labels - table.col(2)).cwiseAbs().maxCoeff() < 1e-12);
  std::remove(path.c_str());
}

TEST_CASE("csv drops NaN rows and counts them") {
  std::string path = temp_path("nans.csv");
  {
    std::ofstream out(path);
    out << "a,b,y\n1,2,3\nnan,2,3\n4,,6\n7,8,NA\n10,11,12\n";
  }
  CsvSchema schema;
  schema.feature_columns = {"a", "b"};
  schema.label_column = "y";
  LoadReport loaded = load_csv(path, schema);
  CHECK(loaded.dropped_rows == 3);
  CHECK(loaded.dataset.rows() == 2);
  CHECK(loaded.dataset.features(1, 0) == 10.0);
  std::remove(path.c_str());
}

TEST_CASE("csv rejects junk cells and missing columns") {
  std::string path = temp_path("junk.csv");
  {
    std::ofstream out(path);
    out << "a,b\n1,2\n3,oops\n";
  }
  CsvSchema schema;
  schema.feature_columns = {"a", "b"};
  try {
    load_csv(path, schema);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == "b");
  }
  CsvSchema missing;
  missing.feature_columns = {"a", "zz"};
  CHECK_THROWS_AS(load_csv(path, missing), InputError);
  CHECK_THROWS_AS(load_csv("/nonexistent/no.csv", schema), IoError);
  std::remove(path.c_str());
}

TEST_CASE("csv honors a custom delimiter") {
  std::string path = temp_path("semi.csv");
  Eigen::MatrixXd table(2, 2);
  table << 1.5, 2.5, 3.5, 4.5;
  write_csv(path, {"u", "v"}, table, ';');
  CsvSchema schema;
  schema.feature_columns = {"u", "v"};
  schema.delimiter = ';';
  LoadReport loaded = load_csv(path, schema);
  CHECK((loaded.dataset.features - table).cwiseAbs().maxCoeff() < 1e-12);
  std::remove(path.c_str());
}

TEST_CASE("pca recovers a one-dimensional subspace") {
  Eigen::MatrixXd X(5, 2);
  for (int i = 0; i < 5; ++i) {
    double t = i - 2.0;
    X(i, 0) = 0.6 * t;
    X(i, 1) = 0.8 * t;
  }
  PcaModel model = pca_fit(X, 1);
  CHECK(model.components(0, 0) == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(model.components(0, 1) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(model.explained_variance[0] == doctest::Approx(2.5).epsilon(1e-10));
  Eigen::MatrixXd T = pca_transform(model, X);
  for (int i = 0; i < 5; ++i) CHECK(T(i, 0) == doctest::Approx(i - 2.0).epsilon(1e-10));
}

TEST_CASE("full-rank pca preserves pairwise distances") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(40, 4);
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < 4; ++j) X(i, j) = gauss(rng);
  PcaModel model = pca_fit(X, 4);
  Eigen::MatrixXd T = pca_transform(model, X);
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      double dx = (X.row(i) - X.row(j)).norm();
      double dt = (T.row(i) - T.row(j)).norm();
      CHECK(dx == doctest::Approx(dt).epsilon(1e-10));
    }
  // Orthonormal rows.
  Eigen::MatrixXd gram = model.components * model.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca on projected data reproduces the projection up to sign") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(60, 5);
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < 5; ++j) X(i, j) = gauss(rng) * (j + 1);
  PcaModel first = pca_fit(X, 3);
  Eigen::MatrixXd T = pca_transform(first, X);
  PcaModel second = pca_fit(T, 3);
  Eigen::MatrixXd T2 = pca_transform(second, T);
  for (int c = 0; c < 3; ++c) {
    double same = (T2.col(c) - (T.col(c).array() - T.col(c).mean()).matrix()).cwiseAbs().maxCoeff();
    double flip = (T2.col(c) + (T.col(c).array() - T.col(c).mean()).matrix()).cwiseAbs().maxCoeff();
    CHECK(std::min(same, flip) < 1e-8);
  }
}

TEST_CASE("pca input validation") {
  Eigen::MatrixXd X(3, 2);
  X.setZero();
  CHECK_THROWS_AS(pca_fit(X, 0), InputError);
  CHECK_THROWS_AS(pca_fit(X, 3), InputError);
  CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Zero(1, 2), 1), InputError);
}

}  // TEST_SUITE
