#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lppi/dataset.hpp"
#include "lppi/kernels.hpp"

namespace lppi {

enum class ExperimentKind { coverage, error_scatter, arrow_comparison, distribution };

// How each replicate draws its working data from the pools. subsample takes
// rows without replacement (each replicate sees a tenth of the pool, which
// is ten times the fit size); bootstrap draws with replacement.
enum class ResamplingMode { subsample, bootstrap };

// Which predictor supplies the prediction column in simulation mode.
// "zero" is the deliberately bad baseline used for contrast runs. In
// real-data mode predictions are a column of the files instead.
struct PredictorSpec {
  std::string type = "noisy_oracle";  // noisy_oracle | zero
  double sigma = 0.316;
  std::uint64_t seed = 1;
};

// Real-data pools. The labeled file needs features, labels, and
// predictions; the unlabeled file needs features and predictions.
struct DataManifest {
  std::string labeled_csv;
  std::string unlabeled_csv;
  std::vector<std::string> feature_columns;
  std::string label_column;
  std::string prediction_column;
};

// Declarative description of one experiment. sizes lists the per-replicate
// fit sizes (n, N); the pools behind them are generated ten times larger.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::coverage;
  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  int n_targets = 20;
  int n_replicates = 100;
  double alpha = 0.05;
  std::optional<double> h;  // empty: n^(-1/(p+4)) per size row
  double noise_var = 0.2;
  KernelFamily kernel = KernelFamily::gaussian;
  PredictorSpec predictor;
  bool bias_correction = true;
  ResamplingMode resampling = ResamplingMode::subsample;
  std::uint64_t seed = 0;
  std::optional<DataManifest> data;  // empty: the simulation generator
};

// JSON round trip with a schema_version field. Violations raise SchemaError
// naming the offending field.
ExperimentSpec load_experiment_spec(const std::string& path);
void save_experiment_spec(const ExperimentSpec& spec, const std::string& path);

// One (size, method) row of the headline table. se_decay_pct is
// 100 (1 - se_pp / se_con) and repeats on both method rows of a size.
struct SizeRow {
  std::size_t n = 0;
  std::size_t N = 0;
  std::string method;
  double coverage = 0.0;
  double debiased_coverage = 0.0;
  double standard_error = 0.0;
  double se_decay_pct = 0.0;
  double mse = 0.0;
  double h = 0.0;  // bandwidth actually used for this row
  int invalid_cells = 0;     // targets where this method failed too often
  int degenerate_cells = 0;  // zero-spread cells (flagged, not averaged away)
  long trials = 0;           // interval evaluations behind the coverages
};

struct TargetSummary {
  int size_index = 0;
  int target_index = 0;
  double se_con = 0.0, se_pp = 0.0;
  double mse_con = 0.0, mse_pp = 0.0;
  std::string quadrant;  // std_{down,up}_mse_{down,up}
  bool valid = false;
};

struct ErrorSample {
  int size_index = 0;
  int target_index = 0;
  int replicate = 0;
  std::string method;
  double error = 0.0;  // m_hat - truth
};

// Gradient accuracy split by coordinate block: nonlinear covers the first
// three coordinates of the benchmark, linear the next four.
struct BlockRow {
  int size_index = 0;
  std::string block;
  std::string method;
  double mse = 0.0;
  double se = 0.0;
};

struct MethodScatter {
  double q_lo = 0.0;  // empirical 2.5% quantile of the signed errors
  double q_hi = 0.0;  // 97.5%
  double mse = 0.0;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::coverage;
  std::string truth_metric;  // "oracle" in simulation, "label_proxy" on files
  std::vector<SizeRow> rows;
  std::vector<TargetSummary> targets;
  std::map<std::string, double> quadrant_pct;
  std::vector<ErrorSample> errors;
  std::map<std::string, MethodScatter> scatter;
  std::vector<BlockRow> blocks;
};

// Runs the experiment the spec describes. jobs only splits targets across
// threads; results are identical for any worker count.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

// Kind-checked entry points for the individual studies.
ExperimentResult run_coverage(const ExperimentSpec& spec, int jobs = 1);
ExperimentResult run_arrow_comparison(const ExperimentSpec& spec, int jobs = 1);
ExperimentResult run_error_scatter(const ExperimentSpec& spec, int jobs = 1);
ExperimentResult run_distribution(const ExperimentSpec& spec, int jobs = 1);

// Writes the result directory: per-kind CSV tables plus summary.json with
// the resolved config inlined. Byte-identical across reruns.
void write_results(const ExperimentResult& result, const ExperimentSpec& spec,
                   const std::string& out_dir);

}  // namespace lppi
