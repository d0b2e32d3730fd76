#include "lppi/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "lppi/csv.hpp"
#include "lppi/errors.hpp"
#include "lppi/estimators.hpp"
#include "lppi/parallel.hpp"
#include "lppi/predictors.hpp"
#include "lppi/rng.hpp"
#include "lppi/simulate.hpp"
#include "lppi/special_functions.hpp"
#include "lppi/uncertainty.hpp"

namespace lppi {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kSaltPool = 0x1001;
constexpr std::uint64_t kSaltTarget = 0x1002;
constexpr std::uint64_t kSaltReplicate = 0x1003;

const char* const kMethodName[2] = {"conventional", "ppi"};

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::coverage: return "coverage";
    case ExperimentKind::error_scatter: return "error_scatter";
    case ExperimentKind::arrow_comparison: return "arrow_comparison";
    case ExperimentKind::distribution: return "distribution";
  }
  return "coverage";
}

ExperimentKind kind_from(const std::string& s) {
  if (s == "coverage") return ExperimentKind::coverage;
  if (s == "error_scatter") return ExperimentKind::error_scatter;
  if (s == "arrow_comparison") return ExperimentKind::arrow_comparison;
  if (s == "distribution") return ExperimentKind::distribution;
  throw SchemaError("kind", "unknown value \"" + s + "\"");
}

std::string family_name(KernelFamily f) {
  return f == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

KernelFamily family_from(const std::string& s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "epanechnikov") return KernelFamily::epanechnikov;
  throw SchemaError("kernel", "unknown value \"" + s + "\"");
}

std::string resampling_name(ResamplingMode m) {
  return m == ResamplingMode::subsample ? "subsample" : "bootstrap";
}

ResamplingMode resampling_from(const std::string& s) {
  if (s == "subsample") return ResamplingMode::subsample;
  if (s == "bootstrap") return ResamplingMode::bootstrap;
  throw SchemaError("resampling", "unknown value \"" + s + "\"");
}

const json& need(const json& j, const char* field) {
  if (!j.contains(field)) throw SchemaError(field, "missing");
  return j.at(field);
}

double as_number(const json& v, const char* field) {
  if (!v.is_number()) throw SchemaError(field, "expected a number");
  return v.get<double>();
}

int as_count(const json& v, const char* field) {
  if (!v.is_number_integer()) throw SchemaError(field, "expected an integer");
  auto n = v.get<long long>();
  if (n < 1) throw SchemaError(field, "must be at least 1");
  return static_cast<int>(n);
}

std::uint64_t as_seed(const json& v, const char* field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  throw SchemaError(field, "expected a nonnegative integer");
}

std::string as_string(const json& v, const char* field) {
  if (!v.is_string()) throw SchemaError(field, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const char* field) {
  if (!v.is_boolean()) throw SchemaError(field, "expected a boolean");
  return v.get<bool>();
}

json spec_to_json(const ExperimentSpec& spec) {
  json j = json::object();
  j["schema_version"] = 1;
  j["kind"] = kind_name(spec.kind);
  json sizes = json::array();
  for (const auto& [n, N] : spec.sizes) sizes.push_back(json::array({n, N}));
  j["sizes"] = std::move(sizes);
  j["n_targets"] = spec.n_targets;
  j["n_replicates"] = spec.n_replicates;
  j["alpha"] = spec.alpha;
  if (spec.h)
    j["h"] = *spec.h;
  else
    j["h"] = nullptr;
  j["noise_var"] = spec.noise_var;
  j["kernel"] = family_name(spec.kernel);
  j["predictor"] = {{"type", spec.predictor.type},
                    {"sigma", spec.predictor.sigma},
                    {"seed", spec.predictor.seed}};
  j["bias_correction"] = spec.bias_correction;
  j["resampling"] = resampling_name(spec.resampling);
  j["seed"] = spec.seed;
  if (spec.data) {
    json cols = json::array();
    for (const auto& c : spec.data->feature_columns) cols.push_back(c);
    j["data"] = {{"labeled_csv", spec.data->labeled_csv},
                 {"unlabeled_csv", spec.data->unlabeled_csv},
                 {"feature_columns", std::move(cols)},
                 {"label_column", spec.data->label_column},
                 {"prediction_column", spec.data->prediction_column}};
  } else {
    j["data"] = nullptr;
  }
  return j;
}

ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("document", "expected a JSON object");
  const json& version = need(j, "schema_version");
  if (!version.is_number_integer() || version.get<long long>() != 1)
    throw SchemaError("schema_version", "unsupported value, expected 1");

  ExperimentSpec spec;
  spec.kind = kind_from(as_string(need(j, "kind"), "kind"));

  const json& sizes = need(j, "sizes");
  if (!sizes.is_array() || sizes.empty())
    throw SchemaError("sizes", "expected a nonempty array of [n, N] pairs");
  for (const auto& entry : sizes) {
    if (!entry.is_array() || entry.size() != 2)
      throw SchemaError("sizes", "each entry must be an [n, N] pair");
    long long n = entry[0].is_number_integer() ? entry[0].get<long long>() : -1;
    long long N = entry[1].is_number_integer() ? entry[1].get<long long>() : -1;
    if (n < 1 || N < 1) throw SchemaError("sizes", "counts must be positive integers");
    spec.sizes.emplace_back(static_cast<std::size_t>(n), static_cast<std::size_t>(N));
  }

  if (j.contains("n_targets")) spec.n_targets = as_count(j.at("n_targets"), "n_targets");
  if (j.contains("n_replicates"))
    spec.n_replicates = as_count(j.at("n_replicates"), "n_replicates");
  if (j.contains("alpha")) {
    spec.alpha = as_number(j.at("alpha"), "alpha");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
      throw SchemaError("alpha", "must lie strictly between 0 and 1");
  }
  if (j.contains("h") && !j.at("h").is_null()) {
    double h = as_number(j.at("h"), "h");
    if (!(h > 0.0)) throw SchemaError("h", "must be positive");
    spec.h = h;
  }
  if (j.contains("noise_var")) {
    spec.noise_var = as_number(j.at("noise_var"), "noise_var");
    if (spec.noise_var < 0.0) throw SchemaError("noise_var", "must be nonnegative");
  }
  if (j.contains("kernel")) spec.kernel = family_from(as_string(j.at("kernel"), "kernel"));
  if (j.contains("predictor")) {
    const json& p = j.at("predictor");
    if (!p.is_object()) throw SchemaError("predictor", "expected an object");
    spec.predictor.type = as_string(need(p, "type"), "predictor.type");
    if (spec.predictor.type != "noisy_oracle" && spec.predictor.type != "zero")
      throw SchemaError("predictor.type", "unknown value \"" + spec.predictor.type + "\"");
    if (p.contains("sigma")) {
      spec.predictor.sigma = as_number(p.at("sigma"), "predictor.sigma");
      if (spec.predictor.sigma < 0.0)
        throw SchemaError("predictor.sigma", "must be nonnegative");
    }
    if (p.contains("seed")) spec.predictor.seed = as_seed(p.at("seed"), "predictor.seed");
  }
  if (j.contains("bias_correction"))
    spec.bias_correction = as_bool(j.at("bias_correction"), "bias_correction");
  if (j.contains("resampling"))
    spec.resampling = resampling_from(as_string(j.at("resampling"), "resampling"));
  if (j.contains("seed")) spec.seed = as_seed(j.at("seed"), "seed");
  if (j.contains("data") && !j.at("data").is_null()) {
    const json& d = j.at("data");
    if (!d.is_object()) throw SchemaError("data", "expected an object");
    DataManifest m;
    m.labeled_csv = as_string(need(d, "labeled_csv"), "data.labeled_csv");
    m.unlabeled_csv = as_string(need(d, "unlabeled_csv"), "data.unlabeled_csv");
    const json& cols = need(d, "feature_columns");
    if (!cols.is_array() || cols.empty())
      throw SchemaError("data.feature_columns", "expected a nonempty array of names");
    for (const auto& c : cols)
      m.feature_columns.push_back(as_string(c, "data.feature_columns"));
    m.label_column = as_string(need(d, "label_column"), "data.label_column");
    m.prediction_column =
        as_string(need(d, "prediction_column"), "data.prediction_column");
    spec.data = std::move(m);
  }
  return spec;
}

class ZeroPredictor final : public Predictor {
 public:
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    return Eigen::VectorXd::Zero(X.rows());
  }
  std::string describe() const override { return "zero"; }
};

std::unique_ptr<Predictor> build_predictor(const PredictorSpec& spec) {
  if (spec.type == "noisy_oracle") return make_noisy_oracle(spec.sigma, spec.seed);
  if (spec.type == "zero") return std::make_unique<ZeroPredictor>();
  throw InputError("unknown predictor type: " + spec.type);
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.sizes.empty()) throw InputError("experiment needs at least one (n, N) size");
  for (const auto& [n, N] : spec.sizes)
    if (n == 0 || N == 0) throw InputError("experiment sizes must be positive");
  if (spec.n_targets < 1) throw InputError("n_targets must be at least 1");
  if (spec.n_replicates < 1) throw InputError("n_replicates must be at least 1");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
    throw InputError("alpha must lie strictly between 0 and 1");
  if (spec.h && !(*spec.h > 0.0)) throw InputError("bandwidth must be positive");
  if (spec.noise_var < 0.0) throw InputError("noise variance must be nonnegative");
  if (!spec.data && spec.predictor.type != "noisy_oracle" && spec.predictor.type != "zero")
    throw InputError("unknown predictor type: " + spec.predictor.type);
  if (spec.kind == ExperimentKind::distribution && spec.data)
    throw InputError(
        "the distribution study needs gradient ground truth and runs only on the "
        "simulation generator");
}

struct TargetPoint {
  Eigen::VectorXd x;
  double truth_m = 0.0;
  Eigen::VectorXd truth_grad;  // empty unless the study needs gradients
};

TargetPoint draw_sim_target(std::uint64_t seed, int t, bool want_grad) {
  auto rng = substream({seed, kSaltTarget, static_cast<std::uint64_t>(t)});
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Eigen::VectorXd x(SimulationSpec::dim);
    for (int i = 0; i < SimulationSpec::dim; ++i) x[i] = gauss(rng);
    TargetPoint tp;
    tp.x = std::move(x);
    tp.truth_m = simulate_m(tp.x);
    if (!want_grad) return tp;
    // Continuous draws dodge the kink set almost surely; redrawing from the
    // same stream keeps the exceptional branch deterministic.
    try {
      tp.truth_grad = simulate_gradient(tp.x);
      return tp;
    } catch (const NondifferentiablePoint&) {
    }
  }
}

struct MethodCell {
  std::vector<int> reps;                  // replicate index per successful fit
  std::vector<double> mhat;               // m estimates, one per success
  std::vector<Eigen::VectorXd> grad_err;  // grad_hat - truth, distribution study only
  int failures = 0;
  bool valid = false;
  bool degenerate = false;
  double se = 0.0;
  double mse = 0.0;
  double cover_raw = 0.0;
  double cover_debias = 0.0;
};

struct CellPair {
  MethodCell method[2];  // [0] conventional, [1] ppi
  double shift = 0.0;    // h^2 b1, subtracted from the center when de-biasing
};

// Draws k row indices from a pool of perm.size() rows. Without replacement the
// persistent permutation is advanced by k Fisher-Yates steps: from any starting
// arrangement the first k slots are then a uniform k-subset, so one array
// serves every replicate of a target at O(k) per draw.
void draw_indices(std::vector<int>& out, std::vector<int>& perm, std::size_t k,
                  ResamplingMode mode, std::mt19937_64& rng) {
  out.resize(k);
  if (mode == ResamplingMode::bootstrap) {
    for (std::size_t i = 0; i < k; ++i)
      out[i] = static_cast<int>(uniform_index(rng, perm.size()));
    return;
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, perm.size() - i);
    std::swap(perm[i], perm[j]);
    out[i] = perm[i];
  }
}

void record_fit(MethodCell& cell, int r, const LocalFit& fit, const TargetPoint& tp,
                bool want_grad) {
  cell.reps.push_back(r);
  cell.mhat.push_back(fit.m_hat);
  if (want_grad && tp.truth_grad.size() > 0)
    cell.grad_err.push_back(fit.grad_hat - tp.truth_grad);
}

void finalize_cell(MethodCell& cell, double truth, double shift, double z,
                   int n_replicates) {
  const std::size_t k = cell.mhat.size();
  cell.valid = 10 * cell.failures <= n_replicates && k >= 2;
  if (k == 0) return;
  double mean = 0.0;
  for (double v : cell.mhat) mean += v;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : cell.mhat) ss += (v - mean) * (v - mean);
  cell.se = k >= 2 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
  cell.degenerate = cell.se == 0.0;
  double mse = 0.0;
  long covered_raw = 0, covered_db = 0;
  for (double v : cell.mhat) {
    const double e = v - truth;
    mse += e * e;
    // A zero-width interval covers only when the center hits the truth
    // exactly; the comparison below degrades to that rule on its own.
    if (std::fabs(e) <= z * cell.se) ++covered_raw;
    if (std::fabs(e - shift) <= z * cell.se) ++covered_db;
  }
  cell.mse = mse / static_cast<double>(k);
  cell.cover_raw = static_cast<double>(covered_raw) / static_cast<double>(k);
  cell.cover_debias = static_cast<double>(covered_db) / static_cast<double>(k);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Type-7 empirical quantile on a pre-sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError(path.string(), "cannot open for writing");
  return os;
}

}  // namespace

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path, "cannot open experiment spec");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError("document", e.what());
  }
  return spec_from_json(j);
}

void save_experiment_spec(const ExperimentSpec& spec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError(path, "cannot open for writing");
  os << spec_to_json(spec).dump(2) << '\n';
  if (!os) throw IoError(path, "write failed");
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  validate_spec(spec);
  const bool simulation = !spec.data.has_value();
  const bool want_grad = spec.kind == ExperimentKind::distribution;
  const int workers = resolve_jobs(jobs);
  const int T = spec.n_targets;
  const int R = spec.n_replicates;
  const double z = normal_quantile(1.0 - spec.alpha / 2.0);

  ExperimentResult result;
  result.kind = spec.kind;
  result.truth_metric = simulation ? "oracle" : "label_proxy";

  const int p = simulation ? SimulationSpec::dim
                           : static_cast<int>(spec.data->feature_columns.size());
  KernelSpec kspec;
  kspec.family = spec.kernel;
  kspec.p = p;
  std::unique_ptr<Predictor> predictor;
  if (simulation) predictor = build_predictor(spec.predictor);

  // Targets are drawn once and shared across size rows so the standard error
  // curves are comparable row to row.
  std::vector<TargetPoint> targets;
  targets.reserve(static_cast<std::size_t>(T));
  Dataset real_labeled, real_unlabeled;
  if (simulation) {
    for (int t = 0; t < T; ++t) targets.push_back(draw_sim_target(spec.seed, t, want_grad));
  } else {
    const DataManifest& m = *spec.data;
    CsvSchema labeled_schema;
    labeled_schema.feature_columns = m.feature_columns;
    labeled_schema.label_column = m.label_column;
    labeled_schema.prediction_column = m.prediction_column;
    CsvSchema unlabeled_schema;
    unlabeled_schema.feature_columns = m.feature_columns;
    unlabeled_schema.prediction_column = m.prediction_column;
    Dataset labeled_all = load_csv(m.labeled_csv, labeled_schema).dataset;
    real_unlabeled = load_csv(m.unlabeled_csv, unlabeled_schema).dataset;
    const std::size_t M = labeled_all.rows();
    if (M <= static_cast<std::size_t>(T))
      throw InputError("labeled data has " + std::to_string(M) +
                       " rows, not enough to hold out " + std::to_string(T) +
                       " target points");
    // Held-out labeled rows serve as targets; their labels are the truth
    // proxy and the rows leave the fitting pool.
    std::vector<int> perm(M);
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = substream({spec.seed, kSaltTarget});
    std::vector<int> chosen;
    draw_indices(chosen, perm, static_cast<std::size_t>(T), ResamplingMode::subsample, rng);
    std::vector<char> is_target(M, 0);
    for (int idx : chosen) is_target[static_cast<std::size_t>(idx)] = 1;
    for (int idx : chosen) {
      TargetPoint tp;
      tp.x = labeled_all.features.row(idx).transpose();
      tp.truth_m = (*labeled_all.labels)[idx];
      targets.push_back(std::move(tp));
    }
    std::vector<int> keep;
    keep.reserve(M - static_cast<std::size_t>(T));
    for (std::size_t i = 0; i < M; ++i)
      if (!is_target[i]) keep.push_back(static_cast<int>(i));
    real_labeled = take_rows(labeled_all, keep);
  }

  const bool want_targets = spec.kind == ExperimentKind::arrow_comparison;
  const bool want_errors = spec.kind == ExperimentKind::error_scatter;

  for (std::size_t s = 0; s < spec.sizes.size(); ++s) {
    const auto [n, N] = spec.sizes[s];
    const double h = spec.h ? *spec.h : default_bandwidth(n, p);

    Dataset pool_labeled, pool_unlabeled;
    if (simulation) {
      // The generated pools are ten times the per-replicate sizes, so each
      // subsample replicate works on a decile of its pool.
      SimulationSpec gen;
      gen.n_labeled = 10 * n;
      gen.n_unlabeled = 10 * N;
      gen.noise_sd = std::sqrt(spec.noise_var);
      gen.seed = mix_keys({spec.seed, kSaltPool, static_cast<std::uint64_t>(s)});
      SimulationDraw draw = generate(gen);
      pool_labeled = with_predictions(draw.labeled, *predictor);
      pool_unlabeled = with_predictions(draw.unlabeled, *predictor);
    } else {
      pool_labeled = real_labeled;
      pool_unlabeled = real_unlabeled;
    }
    if (spec.resampling == ResamplingMode::subsample) {
      if (n > pool_labeled.rows())
        throw InputError("size row asks for " + std::to_string(n) +
                         " labeled rows per replicate but the pool holds " +
                         std::to_string(pool_labeled.rows()));
      if (N > pool_unlabeled.rows())
        throw InputError("size row asks for " + std::to_string(N) +
                         " unlabeled rows per replicate but the pool holds " +
                         std::to_string(pool_unlabeled.rows()));
    }

    std::vector<CellPair> cells(static_cast<std::size_t>(T));
    parallel_for(static_cast<std::size_t>(T), workers, [&](std::size_t ti) {
      const TargetPoint& tp = targets[ti];
      CellPair& cell = cells[ti];
      const std::size_t ML = pool_labeled.rows();
      const std::size_t MU = pool_unlabeled.rows();
      std::vector<int> perm_lab(ML), perm_unlab(MU);
      std::iota(perm_lab.begin(), perm_lab.end(), 0);
      std::iota(perm_unlab.begin(), perm_unlab.end(), 0);
      std::vector<int> idx_lab, idx_unlab;
      for (int r = 0; r < R; ++r) {
        auto rng = substream({spec.seed, kSaltReplicate, static_cast<std::uint64_t>(s),
                              static_cast<std::uint64_t>(ti), static_cast<std::uint64_t>(r)});
        draw_indices(idx_lab, perm_lab, n, spec.resampling, rng);
        draw_indices(idx_unlab, perm_unlab, N, spec.resampling, rng);
        Dataset lab = take_rows(pool_labeled, idx_lab);
        Dataset unlab = take_rows(pool_unlabeled, idx_unlab);
        try {
          record_fit(cell.method[0], r, conventional_fit(lab, tp.x, h, kspec), tp, want_grad);
        } catch (const NumericError&) {
          ++cell.method[0].failures;
        }
        try {
          record_fit(cell.method[1], r, ppi_fit(lab, unlab, tp.x, h, kspec), tp, want_grad);
        } catch (const NumericError&) {
          ++cell.method[1].failures;
        }
      }
      cell.shift = 0.0;
      if (spec.bias_correction) {
        // Plug-in correction from the pool in both modes: the truth columns
        // score errors, they never steer the centers.
        try {
          cell.shift = plugin_bias_terms(pool_labeled, tp.x, h, kspec).b1 * h * h;
        } catch (const PluginUnavailable&) {
          cell.shift = 0.0;  // fall back to the uncorrected center
        }
      }
      finalize_cell(cell.method[0], tp.truth_m, cell.shift, z, R);
      finalize_cell(cell.method[1], tp.truth_m, cell.shift, z, R);
    });

    // Row aggregates run over targets where both methods are valid so the
    // two method rows describe the same cells.
    std::vector<std::size_t> both_valid;
    for (std::size_t t = 0; t < cells.size(); ++t)
      if (cells[t].method[0].valid && cells[t].method[1].valid) both_valid.push_back(t);

    SizeRow rows[2];
    for (int m = 0; m < 2; ++m) {
      SizeRow& row = rows[m];
      row.n = n;
      row.N = N;
      row.method = kMethodName[m];
      row.h = h;
      for (const CellPair& cell : cells)
        if (!cell.method[m].valid) ++row.invalid_cells;
      double cov = 0.0, covd = 0.0, se = 0.0, mse = 0.0;
      for (std::size_t t : both_valid) {
        const MethodCell& mc = cells[t].method[m];
        cov += mc.cover_raw;
        covd += mc.cover_debias;
        se += mc.se;
        mse += mc.mse;
        row.trials += static_cast<long>(mc.mhat.size());
        row.degenerate_cells += mc.degenerate ? 1 : 0;
      }
      if (!both_valid.empty()) {
        const double denom = static_cast<double>(both_valid.size());
        row.coverage = cov / denom;
        row.debiased_coverage = covd / denom;
        row.standard_error = se / denom;
        row.mse = mse / denom;
      }
    }
    const double decay = rows[0].standard_error > 0.0
                             ? 100.0 * (1.0 - rows[1].standard_error / rows[0].standard_error)
                             : 0.0;
    rows[0].se_decay_pct = decay;
    rows[1].se_decay_pct = decay;
    result.rows.push_back(std::move(rows[0]));
    result.rows.push_back(std::move(rows[1]));

    if (want_targets) {
      for (std::size_t t = 0; t < cells.size(); ++t) {
        const MethodCell& con = cells[t].method[0];
        const MethodCell& pp = cells[t].method[1];
        TargetSummary ts;
        ts.size_index = static_cast<int>(s);
        ts.target_index = static_cast<int>(t);
        ts.se_con = con.se;
        ts.se_pp = pp.se;
        ts.mse_con = con.mse;
        ts.mse_pp = pp.mse;
        ts.valid = con.valid && pp.valid;
        ts.quadrant = std::string(pp.se < con.se ? "std_down" : "std_up") + "_" +
                      (pp.mse < con.mse ? "mse_down" : "mse_up");
        result.targets.push_back(std::move(ts));
      }
    }

    if (want_errors) {
      for (std::size_t t : both_valid) {
        const TargetPoint& tp = targets[t];
        for (int m = 0; m < 2; ++m) {
          const MethodCell& mc = cells[t].method[m];
          for (std::size_t i = 0; i < mc.mhat.size(); ++i) {
            ErrorSample es;
            es.size_index = static_cast<int>(s);
            es.target_index = static_cast<int>(t);
            es.replicate = mc.reps[i];
            es.method = kMethodName[m];
            es.error = mc.mhat[i] - tp.truth_m;
            result.errors.push_back(std::move(es));
          }
        }
      }
    }

    if (want_grad) {
      static const std::vector<int> kNonlinear{0, 1, 2};
      static const std::vector<int> kLinear{3, 4, 5, 6};
      const struct {
        const char* name;
        const std::vector<int>* coords;
      } blocks[2] = {{"nonlinear", &kNonlinear}, {"linear", &kLinear}};
      for (const auto& block : blocks) {
        for (int m = 0; m < 2; ++m) {
          std::vector<double> vals;
          for (std::size_t t : both_valid)
            for (const Eigen::VectorXd& g : cells[t].method[m].grad_err) {
              double v = 0.0;
              for (int c : *block.coords) v += g[c] * g[c];
              vals.push_back(v / static_cast<double>(block.coords->size()));
            }
          BlockRow br;
          br.size_index = static_cast<int>(s);
          br.block = block.name;
          br.method = kMethodName[m];
          br.mse = mean_of(vals);
          br.se = vals.size() >= 2
                      ? sd_of(vals) / std::sqrt(static_cast<double>(vals.size()))
                      : 0.0;
          result.blocks.push_back(std::move(br));
        }
      }
    }
  }

  if (want_targets) {
    const char* const quads[4] = {"std_down_mse_down", "std_down_mse_up",
                                  "std_up_mse_down", "std_up_mse_up"};
    std::map<std::string, long> counts;
    for (const char* q : quads) counts[q] = 0;
    long total = 0;
    for (const TargetSummary& ts : result.targets)
      if (ts.valid) {
        ++counts[ts.quadrant];
        ++total;
      }
    for (const char* q : quads)
      result.quadrant_pct[q] =
          total > 0 ? 100.0 * static_cast<double>(counts[q]) / static_cast<double>(total)
                    : 0.0;
  }

  if (want_errors) {
    for (int m = 0; m < 2; ++m) {
      std::vector<double> errs;
      for (const ErrorSample& es : result.errors)
        if (es.method == kMethodName[m]) errs.push_back(es.error);
      std::sort(errs.begin(), errs.end());
      MethodScatter sc;
      sc.q_lo = quantile_sorted(errs, 0.025);
      sc.q_hi = quantile_sorted(errs, 0.975);
      double mse = 0.0;
      for (double e : errs) mse += e * e;
      sc.mse = errs.empty() ? 0.0 : mse / static_cast<double>(errs.size());
      result.scatter[kMethodName[m]] = sc;
    }
  }

  return result;
}

ExperimentResult run_coverage(const ExperimentSpec& spec, int jobs) {
  if (spec.kind != ExperimentKind::coverage)
    throw InputError("spec kind is not coverage");
  return run_experiment(spec, jobs);
}

ExperimentResult run_arrow_comparison(const ExperimentSpec& spec, int jobs) {
  if (spec.kind != ExperimentKind::arrow_comparison)
    throw InputError("spec kind is not arrow_comparison");
  return run_experiment(spec, jobs);
}

ExperimentResult run_error_scatter(const ExperimentSpec& spec, int jobs) {
  if (spec.kind != ExperimentKind::error_scatter)
    throw InputError("spec kind is not error_scatter");
  return run_experiment(spec, jobs);
}

ExperimentResult run_distribution(const ExperimentSpec& spec, int jobs) {
  if (spec.kind != ExperimentKind::distribution)
    throw InputError("spec kind is not distribution");
  return run_experiment(spec, jobs);
}

void write_results(const ExperimentResult& result, const ExperimentSpec& spec,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir, "cannot create directory: " + ec.message());
  const fs::path dir(out_dir);

  {
    std::ofstream os = open_output(dir / "coverage_rows.csv");
    os << "n,N,method,coverage,debiased_coverage,standard_error,se_decay_pct,mse,h,"
          "invalid_cells,degenerate_cells,trials\n";
    for (const SizeRow& row : result.rows)
      os << row.n << ',' << row.N << ',' << row.method << ','
         << format_double(row.coverage) << ',' << format_double(row.debiased_coverage)
         << ',' << format_double(row.standard_error) << ','
         << format_double(row.se_decay_pct) << ',' << format_double(row.mse) << ','
         << format_double(row.h) << ',' << row.invalid_cells << ','
         << row.degenerate_cells << ',' << row.trials << '\n';
    if (!os) throw IoError((dir / "coverage_rows.csv").string(), "write failed");
  }

  if (result.kind == ExperimentKind::arrow_comparison) {
    std::ofstream os = open_output(dir / "arrow_targets.csv");
    os << "size_index,target_index,se_con,se_pp,mse_con,mse_pp,quadrant,valid\n";
    for (const TargetSummary& ts : result.targets)
      os << ts.size_index << ',' << ts.target_index << ',' << format_double(ts.se_con)
         << ',' << format_double(ts.se_pp) << ',' << format_double(ts.mse_con) << ','
         << format_double(ts.mse_pp) << ',' << ts.quadrant << ',' << (ts.valid ? 1 : 0)
         << '\n';
    if (!os) throw IoError((dir / "arrow_targets.csv").string(), "write failed");
  }

  if (result.kind == ExperimentKind::error_scatter) {
    std::ofstream os = open_output(dir / "errors.csv");
    os << "size_index,target_index,replicate,method,error\n";
    for (const ErrorSample& es : result.errors)
      os << es.size_index << ',' << es.target_index << ',' << es.replicate << ','
         << es.method << ',' << format_double(es.error) << '\n';
    if (!os) throw IoError((dir / "errors.csv").string(), "write failed");
  }

  if (result.kind == ExperimentKind::distribution) {
    std::ofstream os = open_output(dir / "gradient_blocks.csv");
    os << "size_index,block,method,mse,se\n";
    for (const BlockRow& br : result.blocks)
      os << br.size_index << ',' << br.block << ',' << br.method << ','
         << format_double(br.mse) << ',' << format_double(br.se) << '\n';
    if (!os) throw IoError((dir / "gradient_blocks.csv").string(), "write failed");
  }

  json summary = json::object();
  summary["schema_version"] = 1;
  summary["config"] = spec_to_json(spec);
  summary["truth_metric"] = result.truth_metric;
  json rows = json::array();
  for (const SizeRow& row : result.rows) {
    json r = json::object();
    r["n"] = row.n;
    r["N"] = row.N;
    r["method"] = row.method;
    r["coverage"] = row.coverage;
    r["debiased_coverage"] = row.debiased_coverage;
    r["standard_error"] = row.standard_error;
    r["se_decay_pct"] = row.se_decay_pct;
    r["mse"] = row.mse;
    r["h"] = row.h;
    r["invalid_cells"] = row.invalid_cells;
    r["degenerate_cells"] = row.degenerate_cells;
    r["trials"] = row.trials;
    rows.push_back(std::move(r));
  }
  summary["rows"] = std::move(rows);
  if (result.kind == ExperimentKind::arrow_comparison) {
    json q = json::object();
    for (const auto& [name, pct] : result.quadrant_pct) q[name] = pct;
    summary["quadrant_pct"] = std::move(q);
  } else {
    summary["quadrant_pct"] = nullptr;
  }
  if (result.kind == ExperimentKind::error_scatter) {
    json sc = json::object();
    for (const auto& [name, s] : result.scatter)
      sc[name] = {{"q_lo", s.q_lo}, {"q_hi", s.q_hi}, {"mse", s.mse}};
    summary["scatter"] = std::move(sc);
  } else {
    summary["scatter"] = nullptr;
  }
  std::ofstream os = open_output(dir / "summary.json");
  os << summary.dump(2) << '\n';
  if (!os) throw IoError((dir / "summary.json").string(), "write failed");
}

}  // namespace lppi
