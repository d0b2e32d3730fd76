#include "lppi/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lppi/csv.hpp"
#include "lppi/errors.hpp"
#include "lppi/estimators.hpp"
#include "lppi/experiments.hpp"
#include "lppi/kernels.hpp"
#include "lppi/pca.hpp"
#include "lppi/predictors.hpp"
#include "lppi/simulate.hpp"
#include "lppi/uncertainty.hpp"

namespace lppi {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_list(const std::string& text, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, delim)) out.push_back(cell);
  return out;
}

// First line of a delimited file, so feature columns can default to
// everything the schema does not claim for labels or predictions.
std::vector<std::string> read_header(const std::string& path, char delim) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return split_list(line, delim);
}

std::vector<std::string> resolve_features(const std::string& path, const std::string& listed,
                                          const std::vector<std::string>& reserved) {
  std::vector<std::string> cols;
  if (!listed.empty()) {
    cols = split_list(listed, ',');
  } else {
    for (const std::string& name : read_header(path, ',')) {
      bool taken = false;
      for (const std::string& r : reserved) taken = taken || (!r.empty() && name == r);
      if (!taken) cols.push_back(name);
    }
  }
  if (cols.empty()) throw InputError(path + ": no feature columns left after " +
                                     "reserving label/prediction columns");
  return cols;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<std::string> cells = split_list(text, ',');
  Eigen::VectorXd v(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      std::size_t used = 0;
      v[static_cast<Eigen::Index>(i)] = std::stod(cells[i], &used);
      if (used != cells[i].size()) throw std::invalid_argument(cells[i]);
    } catch (const std::exception&) {
      throw InputError("--target: cannot parse '" + cells[i] + "' as a number");
    }
  }
  return v;
}

ordered_json to_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ordered_json to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i))));
  return rows;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

// Reports go to --out when given, stdout otherwise.
void emit_report(const ordered_json& doc, const std::string& out_path) {
  std::string text = doc.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
}

KernelFamily parse_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw InputError("unknown kernel '" + name + "'");
}

struct SimulateArgs {
  std::size_t n = 0;
  std::size_t N = 0;
  double noise_var = 0.2;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_simulate(const SimulateArgs& args) {
  std::error_code ec;
  fs::create_directories(args.out, ec);
  if (ec) throw IoError(args.out, "cannot create directory: " + ec.message());

  SimulationSpec spec;
  spec.n_labeled = args.n;
  spec.n_unlabeled = args.N;
  spec.noise_sd = std::sqrt(args.noise_var);
  spec.seed = args.seed;
  SimulationDraw draw = generate(spec);

  const int p = SimulationSpec::dim;
  std::vector<std::string> feature_cols, grad_cols;
  for (int j = 1; j <= p; ++j) {
    feature_cols.push_back("x" + std::to_string(j));
    grad_cols.push_back("g" + std::to_string(j));
  }

  const auto path = [&](const char* name) { return (fs::path(args.out) / name).string(); };

  std::vector<std::string> labeled_cols = feature_cols;
  labeled_cols.push_back("y");
  Eigen::MatrixXd labeled(draw.labeled.features.rows(), p + 1);
  labeled << draw.labeled.features, *draw.labeled.labels;
  write_csv(path("labeled.csv"), labeled_cols, labeled);
  write_csv(path("unlabeled.csv"), feature_cols, draw.unlabeled.features);

  std::vector<std::string> truth_cols = {"m"};
  truth_cols.insert(truth_cols.end(), grad_cols.begin(), grad_cols.end());
  Eigen::MatrixXd truth_lab(draw.truth_labeled_m.size(), p + 1);
  truth_lab << draw.truth_labeled_m, draw.truth_labeled_grad;
  write_csv(path("truth_labeled.csv"), truth_cols, truth_lab);
  Eigen::MatrixXd truth_unlab(draw.truth_unlabeled_m.size(), p + 1);
  truth_unlab << draw.truth_unlabeled_m, draw.truth_unlabeled_grad;
  write_csv(path("truth_unlabeled.csv"), truth_cols, truth_unlab);

  ordered_json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = "simulation";
  manifest["n"] = args.n;
  manifest["N"] = args.N;
  manifest["noise_var"] = args.noise_var;
  manifest["seed"] = args.seed;
  manifest["labeled_csv"] = "labeled.csv";
  manifest["unlabeled_csv"] = "unlabeled.csv";
  manifest["truth_labeled_csv"] = "truth_labeled.csv";
  manifest["truth_unlabeled_csv"] = "truth_unlabeled.csv";
  manifest["feature_columns"] = feature_cols;
  manifest["label_column"] = "y";
  manifest["truth_value_column"] = "m";
  manifest["truth_gradient_columns"] = grad_cols;
  write_text(path("manifest.json"), manifest.dump(2) + "\n");
  return 0;
}

struct InferArgs {
  std::string labeled;
  std::string unlabeled;
  std::string label_col = "y";
  std::string prediction_col;
  std::string predictions_file;
  std::string predictor;
  int knn_k = 5;
  double predictor_sigma = 0.316;
  std::uint64_t predictor_seed = 1;
  bool allow_leakage = false;
  std::string features;
  std::string target;
  long long target_row = -1;
  double h = 0.0;
  bool h_given = false;
  double alpha = 0.05;
  std::string method = "con";
  double t = 0.0;
  bool t_given = false;
  std::string kernel = "gaussian";
  int boot = 200;
  std::uint64_t seed = 0;
  bool bias_correct = false;
  int jobs = 1;
  std::string out;
};

// Attaches predictions from whichever source the flags selected; updates
// the config echo with what was actually used.
void attach_predictions(const InferArgs& args, Dataset& labeled, std::optional<Dataset>& unlabeled,
                        ordered_json& config) {
  if (!args.prediction_col.empty()) return;  // already loaded from the CSVs
  if (!args.predictions_file.empty()) {
    CsvSchema schema;
    schema.feature_columns = {"prediction"};
    LoadReport preds = load_csv(args.predictions_file, schema);
    const Eigen::VectorXd col = preds.dataset.features.col(0);
    const Eigen::Index n = labeled.features.rows();
    const Eigen::Index N = unlabeled ? unlabeled->features.rows() : 0;
    if (col.size() != n && col.size() != n + N)
      throw InputError(args.predictions_file + ": " + std::to_string(col.size()) +
                       " predictions cannot cover " + std::to_string(n) + " labeled rows" +
                       (N > 0 ? " (or labeled followed by " + std::to_string(N) +
                                " unlabeled rows)"
                              : ""));
    labeled = with_predictions(labeled, *make_file_backed(col.head(n)));
    if (unlabeled && col.size() == n + N)
      *unlabeled = with_predictions(*unlabeled, *make_file_backed(col.tail(N)));
    return;
  }
  if (!args.predictor.empty()) {
    std::unique_ptr<Predictor> pred;
    if (args.predictor == "knn") {
      pred = make_knn(std::make_shared<Dataset>(labeled), args.knn_k);
      config["knn_k"] = args.knn_k;
    } else if (args.predictor == "noisy-oracle") {
      if (labeled.dim() != SimulationSpec::dim)
        throw InputError("noisy-oracle expects the " + std::to_string(SimulationSpec::dim) +
                         "-dimensional simulation features, got " +
                         std::to_string(labeled.dim()));
      pred = make_noisy_oracle(args.predictor_sigma, args.predictor_seed);
      config["predictor_sigma"] = args.predictor_sigma;
      config["predictor_seed"] = args.predictor_seed;
    } else {
      throw InputError("unknown predictor '" + args.predictor + "'");
    }
    config["predictor_describe"] = pred->describe();
    labeled = with_predictions(labeled, *pred, args.allow_leakage);
    if (unlabeled) *unlabeled = with_predictions(*unlabeled, *pred, args.allow_leakage);
  }
}

int cmd_infer(const InferArgs& args) {
  std::vector<std::string> feature_cols =
      resolve_features(args.labeled, args.features, {args.label_col, args.prediction_col});

  CsvSchema labeled_schema;
  labeled_schema.feature_columns = feature_cols;
  labeled_schema.label_column = args.label_col;
  if (!args.prediction_col.empty()) labeled_schema.prediction_column = args.prediction_col;
  LoadReport lab = load_csv(args.labeled, labeled_schema);
  lab.dataset.provenance = args.labeled;

  std::optional<Dataset> unlab;
  std::size_t unlab_dropped = 0;
  if (!args.unlabeled.empty()) {
    CsvSchema unlabeled_schema;
    unlabeled_schema.feature_columns = feature_cols;
    if (!args.prediction_col.empty()) unlabeled_schema.prediction_column = args.prediction_col;
    LoadReport rep = load_csv(args.unlabeled, unlabeled_schema);
    rep.dataset.provenance = args.unlabeled;
    unlab = std::move(rep.dataset);
    unlab_dropped = rep.dropped_rows;
  }

  const int p = lab.dataset.dim();
  const std::size_t n = lab.dataset.rows();

  ordered_json config;
  config["labeled"] = args.labeled;
  config["unlabeled"] = args.unlabeled.empty() ? ordered_json() : ordered_json(args.unlabeled);
  config["label_column"] = args.label_col;
  config["prediction_column"] =
      args.prediction_col.empty() ? ordered_json() : ordered_json(args.prediction_col);
  config["predictions_file"] =
      args.predictions_file.empty() ? ordered_json() : ordered_json(args.predictions_file);
  config["predictor"] = args.predictor.empty() ? ordered_json() : ordered_json(args.predictor);
  config["feature_columns"] = feature_cols;

  attach_predictions(args, lab.dataset, unlab, config);

  Eigen::VectorXd x;
  if (!args.target.empty()) {
    x = parse_vector(args.target);
    if (x.size() != p)
      throw InputError("--target has " + std::to_string(x.size()) + " coordinates, features have " +
                       std::to_string(p));
  } else {
    if (args.target_row < 0 || static_cast<std::size_t>(args.target_row) >= n)
      throw InputError("--target-row " + std::to_string(args.target_row) +
                       " outside the labeled file's " + std::to_string(n) + " rows");
    x = lab.dataset.features.row(args.target_row).transpose();
  }

  const double h = args.h_given ? args.h : default_bandwidth(n, p);
  KernelSpec kspec;
  kspec.family = parse_family(args.kernel);
  kspec.p = p;

  const bool needs_unlabeled = args.method == "ppi" || args.method == "hd";
  if (needs_unlabeled) {
    if (!unlab) throw InputError("--method " + args.method + " needs --unlabeled");
    if (!lab.dataset.has_predictions() || !unlab->has_predictions())
      throw InputError("--method " + args.method +
                       " needs predictions on both files (give --prediction-col, "
                       "--predictions, or --predictor)");
  }
  double t = args.t;
  if (args.method == "hd" && !args.t_given) t = default_hd_t(n, unlab->rows());

  config["target"] = to_json(x);
  config["target_row"] = args.target.empty() ? ordered_json(args.target_row) : ordered_json();
  config["h"] = h;
  config["alpha"] = args.alpha;
  config["method"] = args.method;
  config["t"] = args.method == "hd" ? ordered_json(t) : ordered_json();
  config["kernel"] = args.kernel;
  config["boot"] = args.boot;
  config["seed"] = args.seed;
  config["bias_correct"] = args.bias_correct;
  config["dropped_rows"] = {{"labeled", lab.dropped_rows}, {"unlabeled", unlab_dropped}};

  LocalFit fit;
  std::optional<Rectifier> rect;
  FitFunction fit_fn;
  const Dataset* unlab_ptr = nullptr;
  if (args.method == "con") {
    fit = conventional_fit(lab.dataset, x, h, kspec);
    fit_fn = make_conventional_fitter(h, kspec);
  } else if (args.method == "ppi") {
    fit = ppi_fit(lab.dataset, *unlab, x, h, kspec);
    rect = compute_rectifier(lab.dataset, x, h, kspec);
    fit_fn = make_ppi_fitter(h, kspec);
    unlab_ptr = &*unlab;
  } else {
    fit = hd_fit(lab.dataset, *unlab, x, h, kspec, t);
    rect = hd_rectifier(lab.dataset, *unlab, x, h, kspec, t);
    fit_fn = make_hd_fitter(h, kspec, t);
    unlab_ptr = &*unlab;
  }

  BootstrapOptions bopts;
  bopts.jobs = args.jobs;
  CovarianceEstimate cov =
      bootstrap_covariance(fit_fn, lab.dataset, unlab_ptr, x, args.boot, args.seed, bopts);

  std::optional<BiasTerms> bias;
  ordered_json bias_j;
  if (args.bias_correct) {
    bias_j = ordered_json::object();
    try {
      bias = plugin_bias_terms(lab.dataset, x, h, kspec);
      bias_j["available"] = true;
      bias_j["source"] = "plugin";
      bias_j["b1"] = bias->b1;
      bias_j["b2"] = to_json(bias->b2);
      bias_j["reason"] = nullptr;
    } catch (const PluginUnavailable& e) {
      bias_j["available"] = false;
      bias_j["source"] = "plugin";
      bias_j["b1"] = nullptr;
      bias_j["b2"] = nullptr;
      bias_j["reason"] = std::string(e.what());
    }
  }

  ConfidenceInterval ci = ci_value(fit, cov, args.alpha, bias);
  ConfidenceRegion region =
      region_gradient(fit, cov.matrix.block(1, 1, p, p), args.alpha, bias);

  static const char* kFitNames[] = {"conventional", "ppi", "hd"};
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["config"] = config;
  doc["fit"] = {{"method", kFitNames[args.method == "con" ? 0 : (args.method == "ppi" ? 1 : 2)]},
                {"m_hat", fit.m_hat},
                {"grad_hat", to_json(fit.grad_hat)},
                {"effective_weight_mass", fit.effective_weight_mass},
                {"h", fit.h}};
  if (rect) {
    doc["rectifier"] = {{"delta", to_json(rect->delta)},
                        {"n_used", rect->n_used},
                        {"t", rect->t ? ordered_json(*rect->t) : ordered_json()}};
  } else {
    doc["rectifier"] = nullptr;
  }
  doc["uncertainty"] = {
      {"method", "bootstrap"},
      {"n_boot", cov.n_boot},
      {"n_failed", cov.n_failed},
      {"se_value", std::sqrt(cov.matrix(0, 0))},
      {"covariance", to_json(cov.matrix)},
      {"ci_value",
       {{"lower", ci.lower},
        {"upper", ci.upper},
        {"alpha", ci.alpha},
        {"center", ci.center},
        {"bias_corrected", ci.bias_corrected},
        {"degenerate", ci.degenerate}}},
      {"gradient_region",
       {{"center", to_json(region.center)},
        {"shape", to_json(region.shape)},
        {"radius_sq", region.radius_sq},
        {"alpha", region.alpha},
        {"bias_shift", region.bias_shift ? to_json(*region.bias_shift) : ordered_json()}}}};
  doc["bias_correction"] = bias_j;
  emit_report(doc, args.out);
  return 0;
}

struct ExperimentArgs {
  std::string spec;
  std::string out;
  int jobs = 1;
};

int cmd_experiment(const ExperimentArgs& args) {
  ExperimentSpec spec = load_experiment_spec(args.spec);
  ExperimentResult result = run_experiment(spec, args.jobs);
  write_results(result, spec, args.out);
  return 0;
}

struct PcaArgs {
  std::string input;
  std::string fit_on;
  int components = 0;
  std::string features;
  std::string label_col;
  std::string prediction_col;
  std::string out;
  std::string model_out;
};

int cmd_pca(const PcaArgs& args) {
  std::vector<std::string> feature_cols =
      resolve_features(args.input, args.features, {args.label_col, args.prediction_col});

  CsvSchema schema;
  schema.feature_columns = feature_cols;
  if (!args.label_col.empty()) schema.label_column = args.label_col;
  if (!args.prediction_col.empty()) schema.prediction_column = args.prediction_col;
  LoadReport input = load_csv(args.input, schema);

  Eigen::MatrixXd fit_features = input.dataset.features;
  if (!args.fit_on.empty()) {
    CsvSchema fit_schema;
    fit_schema.feature_columns = feature_cols;
    fit_features = load_csv(args.fit_on, fit_schema).dataset.features;
  }
  PcaModel model = pca_fit(fit_features, args.components);
  Eigen::MatrixXd projected = pca_transform(model, input.dataset.features);

  std::vector<std::string> out_cols;
  for (int j = 1; j <= args.components; ++j) out_cols.push_back("pc" + std::to_string(j));
  Eigen::Index extra = (input.dataset.has_labels() ? 1 : 0) +
                       (input.dataset.has_predictions() ? 1 : 0);
  Eigen::MatrixXd out(projected.rows(), projected.cols() + extra);
  out.leftCols(projected.cols()) = projected;
  Eigen::Index col = projected.cols();
  if (input.dataset.has_labels()) {
    out.col(col++) = *input.dataset.labels;
    out_cols.push_back(args.label_col);
  }
  if (input.dataset.has_predictions()) {
    out.col(col++) = *input.dataset.predictions;
    out_cols.push_back(args.prediction_col);
  }
  write_csv(args.out, out_cols, out);

  if (!args.model_out.empty()) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["feature_columns"] = feature_cols;
    doc["mean"] = to_json(model.mean);
    doc["components"] = to_json(model.components);
    doc["explained_variance"] = to_json(model.explained_variance);
    write_text(args.model_out, doc.dump(2) + "\n");
  }
  return 0;
}

struct QualityArgs {
  std::string data;
  std::string label_col = "y";
  std::string prediction_col = "f";
  std::string features;
  std::string out;
};

int cmd_predict_quality(const QualityArgs& args) {
  std::vector<std::string> feature_cols =
      resolve_features(args.data, args.features, {args.label_col, args.prediction_col});
  CsvSchema schema;
  schema.feature_columns = feature_cols;
  schema.label_column = args.label_col;
  schema.prediction_column = args.prediction_col;
  LoadReport rep = load_csv(args.data, schema);
  QualityReport quality = predictor_quality(rep.dataset);

  ordered_json doc;
  doc["schema_version"] = 1;
  doc["config"] = {{"data", args.data},
                   {"label_column", args.label_col},
                   {"prediction_column", args.prediction_col},
                   {"rows", rep.dataset.rows()},
                   {"dropped_rows", rep.dropped_rows}};
  doc["mse_vs_labels"] = quality.mse_vs_labels;
  doc["ratio_to_label_second_moment"] = quality.ratio_to_label_second_moment;
  doc["ppi_likely_unhelpful"] = quality.ppi_likely_unhelpful;
  emit_report(doc, args.out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Local function-value and gradient inference, prediction-powered or plain"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Draw the synthetic benchmark to CSVs");
  sim_cmd->add_option("--n", sim.n, "Labeled rows")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--N", sim.N, "Unlabeled rows")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--noise-var", sim.noise_var, "Label noise variance")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output directory")->capture_default_str();

  InferArgs inf;
  CLI::App* inf_cmd = app.add_subcommand("infer", "One fit with bootstrap uncertainty, as JSON");
  // The bandwidth flag is --h, so the help flag keeps only its long form here.
  inf_cmd->set_help_flag("--help", "Print this help message and exit");
  inf_cmd->add_option("--labeled", inf.labeled, "Labeled CSV")->required();
  inf_cmd->add_option("--unlabeled", inf.unlabeled, "Unlabeled CSV");
  inf_cmd->add_option("--label-col", inf.label_col, "Label column")->capture_default_str();
  CLI::Option* pred_col =
      inf_cmd->add_option("--prediction-col", inf.prediction_col, "Prediction column in the CSVs");
  CLI::Option* pred_file = inf_cmd->add_option(
      "--predictions", inf.predictions_file,
      "Single-column prediction CSV covering the labeled rows, optionally followed "
      "by the unlabeled rows");
  CLI::Option* pred_kind =
      inf_cmd->add_option("--predictor", inf.predictor, "Built-in predictor: knn | noisy-oracle")
          ->check(CLI::IsMember({"knn", "noisy-oracle"}));
  pred_col->excludes(pred_file)->excludes(pred_kind);
  pred_file->excludes(pred_kind);
  inf_cmd->add_option("--knn-k", inf.knn_k, "Neighbors for --predictor knn")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  inf_cmd->add_option("--predictor-sigma", inf.predictor_sigma, "Noisy-oracle noise sd")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  inf_cmd->add_option("--predictor-seed", inf.predictor_seed, "Noisy-oracle noise seed")
      ->capture_default_str();
  inf_cmd->add_flag("--allow-leakage", inf.allow_leakage,
                    "Permit a predictor trained on the rows it predicts");
  inf_cmd->add_option("--features", inf.features,
                      "Comma-separated feature columns (default: header minus label/prediction)");
  CLI::Option* target_opt =
      inf_cmd->add_option("--target", inf.target, "Target point as comma-separated coordinates");
  CLI::Option* target_row_opt =
      inf_cmd->add_option("--target-row", inf.target_row, "Row of the labeled file as target");
  target_opt->excludes(target_row_opt);
  inf_cmd->add_option("--h", inf.h, "Bandwidth (default: rule-of-thumb n^(-1/(p+4)))")
      ->check(CLI::PositiveNumber);
  inf_cmd->add_option("--alpha", inf.alpha, "Miscoverage level")->capture_default_str();
  inf_cmd->add_option("--method", inf.method, "Estimator: con | ppi | hd")
      ->capture_default_str()
      ->check(CLI::IsMember({"con", "ppi", "hd"}));
  inf_cmd->add_option("--t", inf.t, "HD regularization weight (default: 0.01 n / N)")
      ->check(CLI::PositiveNumber);
  inf_cmd->add_option("--kernel", inf.kernel, "Kernel family: gaussian | epanechnikov")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  inf_cmd->add_option("--boot", inf.boot, "Bootstrap replicates")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  inf_cmd->add_option("--seed", inf.seed, "RNG seed")->capture_default_str();
  inf_cmd->add_flag("--bias-correct", inf.bias_correct, "Shift the interval by the plug-in bias");
  inf_cmd->add_option("--jobs", inf.jobs, "Worker threads (never changes results)")
      ->envname("LOCAL_PPI_JOBS")
      ->check(CLI::PositiveNumber);
  inf_cmd->add_option("--out", inf.out, "Report path (default: stdout)");

  ExperimentArgs exp;
  CLI::App* exp_cmd = app.add_subcommand("experiment", "Run an experiment spec to a directory");
  exp_cmd->add_option("--spec", exp.spec, "Experiment spec JSON")->required();
  exp_cmd->add_option("--out", exp.out, "Result directory")->required();
  exp_cmd->add_option("--jobs", exp.jobs, "Worker threads (never changes results)")
      ->envname("LOCAL_PPI_JOBS")
      ->check(CLI::PositiveNumber);

  PcaArgs pca;
  CLI::App* pca_cmd = app.add_subcommand("pca", "Project features onto principal components");
  pca_cmd->add_option("--input", pca.input, "Input CSV")->required();
  pca_cmd->add_option("--fit-on", pca.fit_on, "Fit the model on this CSV instead of --input");
  pca_cmd->add_option("--components", pca.components, "Number of components")
      ->required()
      ->check(CLI::PositiveNumber);
  pca_cmd->add_option("--features", pca.features,
                      "Comma-separated feature columns (default: header minus label/prediction)");
  pca_cmd->add_option("--label-col", pca.label_col, "Label column passed through unchanged");
  pca_cmd->add_option("--prediction-col", pca.prediction_col,
                      "Prediction column passed through unchanged");
  pca_cmd->add_option("--out", pca.out, "Projected CSV path")->required();
  pca_cmd->add_option("--model-out", pca.model_out, "Optional JSON with mean/components/variance");

  QualityArgs quality;
  CLI::App* quality_cmd =
      app.add_subcommand("predict-quality", "Score a prediction column against labels");
  quality_cmd->add_option("--data", quality.data, "Labeled CSV with predictions")->required();
  quality_cmd->add_option("--label-col", quality.label_col, "Label column")->capture_default_str();
  quality_cmd->add_option("--prediction-col", quality.prediction_col, "Prediction column")
      ->capture_default_str();
  quality_cmd->add_option("--features", quality.features,
                          "Comma-separated feature columns (default: header minus "
                          "label/prediction)");
  quality_cmd->add_option("--out", quality.out, "Report path (default: stdout)");

  int rc = 0;
  sim_cmd->callback([&] { rc = cmd_simulate(sim); });
  inf_cmd->callback([&] {
    inf.h_given = inf_cmd->count("--h") > 0;
    inf.t_given = inf_cmd->count("--t") > 0;
    if (inf.target.empty() && inf_cmd->count("--target-row") == 0)
      throw InputError("give a target: --target or --target-row");
    rc = cmd_infer(inf);
  });
  exp_cmd->callback([&] { rc = cmd_experiment(exp); });
  pca_cmd->callback([&] { rc = cmd_pca(pca); });
  quality_cmd->callback([&] { rc = cmd_predict_quality(quality); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace lppi
