#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
  const char* path = std::getenv("LPPI_CLI");
  REQUIRE_MESSAGE(path != nullptr, "LPPI_CLI must point at the lppi binary");
  return path;
}

// Exit code of a shell command, -1 when the process died abnormally.
int run(const std::string& args) {
  int status = std::system((cli_binary() + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(static_cast<bool>(is));
  std::ostringstream out;
  out << is.rdbuf();
  return out.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  REQUIRE(static_cast<bool>(os));
  os << content;
}

json slurp_json(const fs::path& path) { return json::parse(slurp(path)); }

// A toy file the 1-d subcommands can chew on: one feature, constant label,
// prediction equal to the label.
void write_constant_toy(const fs::path& path, int rows, double label) {
  std::ostringstream out;
  out << "x,y,f\n";
  for (int i = 0; i < rows; ++i)
    out << (0.1 * i) << "," << label << "," << label << "\n";
  spit(path, out.str());
}

// Interprets the subset of JSON Schema the shipped files use: type, enum,
// properties, required, boolean additionalProperties, a single items schema,
// minItems, maxItems. Unknown keywords throw so a schema cannot drift past
// what this checker understands. Returns the first violation, empty on none.
std::string schema_violation(const json& schema, const json& doc, const std::string& where) {
  static const std::set<std::string> known{"$schema",  "title",    "type",
                                           "enum",     "properties", "required",
                                           "additionalProperties", "items",
                                           "minItems", "maxItems"};
  for (const auto& [key, value] : schema.items())
    if (known.count(key) == 0) throw std::runtime_error("unsupported schema keyword: " + key);

  if (schema.contains("type")) {
    auto matches = [&](const std::string& name) {
      if (name == "object") return doc.is_object();
      if (name == "array") return doc.is_array();
      if (name == "string") return doc.is_string();
      if (name == "boolean") return doc.is_boolean();
      if (name == "null") return doc.is_null();
      if (name == "integer") return doc.is_number_integer();
      if (name == "number") return doc.is_number();
      throw std::runtime_error("unsupported type name: " + name);
    };
    const json& type = schema.at("type");
    bool ok = false;
    if (type.is_string())
      ok = matches(type.get<std::string>());
    else
      for (const auto& t : type) ok = ok || matches(t.get<std::string>());
    if (!ok) return where + ": type mismatch";
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema.at("enum")) ok = ok || v == doc;
    if (!ok) return where + ": not among the enum values";
  }
  if (doc.is_object()) {
    if (schema.contains("required"))
      for (const auto& name : schema.at("required"))
        if (!doc.contains(name.get<std::string>()))
          return where + ": missing required key " + name.get<std::string>();
    const json props = schema.value("properties", json::object());
    for (const auto& [key, value] : doc.items()) {
      if (props.contains(key)) {
        std::string err = schema_violation(props.at(key), value, where + "." + key);
        if (!err.empty()) return err;
      } else if (!schema.value("additionalProperties", true)) {
        return where + ": unexpected key " + key;
      }
    }
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") && doc.size() < schema.at("minItems").get<std::size_t>())
      return where + ": fewer than minItems elements";
    if (schema.contains("maxItems") && doc.size() > schema.at("maxItems").get<std::size_t>())
      return where + ": more than maxItems elements";
    if (schema.contains("items"))
      for (std::size_t i = 0; i < doc.size(); ++i) {
        std::string err =
            schema_violation(schema.at("items"), doc[i], where + "[" + std::to_string(i) + "]");
        if (!err.empty()) return err;
      }
  }
  return "";
}

void check_against_schema(const std::string& schema_name, const fs::path& doc_path) {
  const char* dir = std::getenv("LPPI_SCHEMAS");
  REQUIRE_MESSAGE(dir != nullptr, "LPPI_SCHEMAS must point at the schemas directory");
  const json schema = slurp_json(fs::path(dir) / schema_name);
  const std::string err = schema_violation(schema, slurp_json(doc_path), doc_path.string());
  CHECK_MESSAGE(err.empty(), err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes the bundle and repeats byte for byte") {
  REQUIRE(run("simulate --n 30 --N 60 --seed 9 --out cli_sim_a") == 0);
  REQUIRE(run("simulate --n 30 --N 60 --seed 9 --out cli_sim_b") == 0);
  for (const char* name :
       {"labeled.csv", "unlabeled.csv", "truth_labeled.csv", "truth_unlabeled.csv",
        "manifest.json"})
    CHECK(slurp(fs::path("cli_sim_a") / name) == slurp(fs::path("cli_sim_b") / name));

  json manifest = slurp_json("cli_sim_a/manifest.json");
  CHECK(manifest["schema_version"] == 1);
  CHECK(manifest["n"] == 30);
  CHECK(manifest["noise_var"].get<double>() == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(manifest["label_column"] == "y");
  CHECK(manifest["feature_columns"].size() == 10);
}

TEST_CASE("simulate with zero noise reproduces the truth column as labels") {
  REQUIRE(run("simulate --n 25 --N 10 --noise-var 0 --seed 4 --out cli_sim_clean") == 0);
  std::istringstream labeled(slurp("cli_sim_clean/labeled.csv"));
  std::istringstream truth(slurp("cli_sim_clean/truth_labeled.csv"));
  std::string lab_line, truth_line;
  std::getline(labeled, lab_line);
  std::getline(truth, truth_line);
  while (std::getline(labeled, lab_line) && std::getline(truth, truth_line)) {
    const std::string y = lab_line.substr(lab_line.rfind(',') + 1);
    const std::string m = truth_line.substr(0, truth_line.find(','));
    CHECK(std::stod(y) == doctest::Approx(std::stod(m)).epsilon(1e-12));
  }
}

TEST_CASE("infer on a constant-label toy recovers the constant") {
  write_constant_toy("cli_const.csv", 12, 3.25);
  REQUIRE(run("infer --labeled cli_const.csv --label-col y --features x "
              "--target 0.55 --h 1.0 --boot 40 --seed 2 --out cli_const.json") == 0);
  json report = slurp_json("cli_const.json");
  CHECK(report["fit"]["m_hat"].get<double>() == doctest::Approx(3.25).epsilon(1e-10));
  CHECK(report["fit"]["method"] == "conventional");
  CHECK(report["uncertainty"]["n_boot"].get<int>() > 0);
  CHECK(report["config"].contains("jobs") == false);
}

TEST_CASE("ppi with predictions equal to labels matches the conventional fit") {
  write_constant_toy("cli_self.csv", 15, 1.5);
  REQUIRE(run("infer --labeled cli_self.csv --prediction-col f --features x "
              "--target 0.7 --h 1.0 --boot 30 --seed 3 --out cli_self_con.json") == 0);
  REQUIRE(run("infer --labeled cli_self.csv --unlabeled cli_self.csv --prediction-col f "
              "--features x --method ppi --target 0.7 --h 1.0 --boot 30 --seed 3 "
              "--out cli_self_ppi.json") == 0);
  json con = slurp_json("cli_self_con.json");
  json ppi = slurp_json("cli_self_ppi.json");
  CHECK(ppi["fit"]["m_hat"].get<double>() ==
        doctest::Approx(con["fit"]["m_hat"].get<double>()).epsilon(1e-12));
  CHECK(ppi["rectifier"]["delta"][0].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hd rectifier approaches the conventional one as t shrinks") {
  REQUIRE(run("simulate --n 40 --N 200 --seed 21 --out cli_sim_hd") == 0);
  const std::string base =
      "infer --labeled cli_sim_hd/labeled.csv --unlabeled cli_sim_hd/unlabeled.csv "
      "--predictor noisy-oracle --target-row 5 --h 1.5 --boot 20 --seed 6 --method ";
  REQUIRE(run(base + "ppi --out cli_hd_ref.json") == 0);
  REQUIRE(run(base + "hd --t 1e-2 --out cli_hd_coarse.json") == 0);
  REQUIRE(run(base + "hd --t 1e-5 --out cli_hd_fine.json") == 0);

  auto delta = [](const json& report) {
    std::vector<double> out;
    for (const auto& v : report["rectifier"]["delta"]) out.push_back(v.get<double>());
    return out;
  };
  std::vector<double> ref = delta(slurp_json("cli_hd_ref.json"));
  std::vector<double> coarse = delta(slurp_json("cli_hd_coarse.json"));
  std::vector<double> fine = delta(slurp_json("cli_hd_fine.json"));
  REQUIRE(ref.size() == coarse.size());
  double dist_coarse = 0.0, dist_fine = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dist_coarse += (coarse[i] - ref[i]) * (coarse[i] - ref[i]);
    dist_fine += (fine[i] - ref[i]) * (fine[i] - ref[i]);
  }
  CHECK(dist_fine < dist_coarse);
  CHECK(slurp_json("cli_hd_coarse.json")["config"]["t"].get<double>() ==
        doctest::Approx(1e-2));
}

TEST_CASE("infer reruns are byte-identical and ignore the job count") {
  REQUIRE(run("simulate --n 35 --N 80 --seed 13 --out cli_sim_det") == 0);
  const std::string base =
      "infer --labeled cli_sim_det/labeled.csv --unlabeled cli_sim_det/unlabeled.csv "
      "--predictor noisy-oracle --method ppi --target-row 2 --h 1.5 --boot 60 --seed 17 "
      "--bias-correct ";
  REQUIRE(run(base + "--jobs 1 --out cli_det_a.json") == 0);
  REQUIRE(run(base + "--jobs 1 --out cli_det_b.json") == 0);
  REQUIRE(run(base + "--jobs 3 --out cli_det_c.json") == 0);
  const std::string a = slurp("cli_det_a.json");
  CHECK(a == slurp("cli_det_b.json"));
  CHECK(a == slurp("cli_det_c.json"));
}

TEST_CASE("experiment subcommand runs a spec to a directory deterministically") {
  spit("cli_exp_spec.json",
       "{\"schema_version\":1,\"kind\":\"coverage\",\"sizes\":[[30,300]],"
       "\"n_targets\":3,\"n_replicates\":15,\"h\":2.0,\"seed\":11}\n");
  REQUIRE(run("experiment --spec cli_exp_spec.json --out cli_exp_a --jobs 2") == 0);
  REQUIRE(run("experiment --spec cli_exp_spec.json --out cli_exp_b --jobs 1") == 0);
  CHECK(slurp("cli_exp_a/coverage_rows.csv") == slurp("cli_exp_b/coverage_rows.csv"));
  CHECK(slurp("cli_exp_a/summary.json") == slurp("cli_exp_b/summary.json"));
  json summary = slurp_json("cli_exp_a/summary.json");
  CHECK(summary["rows"].size() == 2);
  CHECK(summary["rows"][0].contains("se_decay_pct"));
}

TEST_CASE("pca projects and passes label columns through") {
  REQUIRE(run("simulate --n 50 --N 10 --seed 31 --out cli_sim_pca") == 0);
  REQUIRE(run("pca --input cli_sim_pca/labeled.csv --label-col y --components 3 "
              "--out cli_pca.csv --model-out cli_pca_model.json") == 0);
  std::istringstream out(slurp("cli_pca.csv"));
  std::string header;
  std::getline(out, header);
  CHECK(header == "pc1,pc2,pc3,y");
  int rows = 0;
  for (std::string line; std::getline(out, line);) rows += line.empty() ? 0 : 1;
  CHECK(rows == 50);
  json model = slurp_json("cli_pca_model.json");
  CHECK(model["components"].size() == 3);
  CHECK(model["explained_variance"].size() == 3);
  double prev = 1e300;
  for (const auto& v : model["explained_variance"]) {
    CHECK(v.get<double>() <= prev);
    prev = v.get<double>();
  }
}

TEST_CASE("predict-quality scores a perfect prediction column as zero error") {
  write_constant_toy("cli_quality.csv", 20, 2.0);
  REQUIRE(run("predict-quality --data cli_quality.csv --prediction-col f "
              "--out cli_quality.json") == 0);
  json report = slurp_json("cli_quality.json");
  CHECK(report["mse_vs_labels"].get<double>() == doctest::Approx(0.0));
  CHECK(report["ppi_likely_unhelpful"] == false);
}

TEST_CASE("exit codes separate input, numeric, and io failures") {
  CHECK(run("infer --labeled cli_missing.csv --target-row 0 2>/dev/null") == 4);
  CHECK(run("no-such-subcommand 2>/dev/null") == 2);
  CHECK(run("simulate --n 10 2>/dev/null") == 2);  // missing required --N
  write_constant_toy("cli_tiny.csv", 12, 1.0);
  CHECK(run("infer --labeled cli_tiny.csv --features x --target 0.5,0.5 2>/dev/null") == 2);
  // Bandwidth far below the feature spacing starves the neighborhood.
  CHECK(run("infer --labeled cli_tiny.csv --features x --target 0.55 --h 1e-8 "
            "--boot 10 2>/dev/null") == 3);
  CHECK(run("experiment --spec cli_exp_spec_missing.json --out cli_exp_x 2>/dev/null") == 4);
  spit("cli_bad_spec.json", "{\"schema_version\":1,\"kind\":\"nope\",\"sizes\":[[30,300]]}\n");
  CHECK(run("experiment --spec cli_bad_spec.json --out cli_exp_y 2>/dev/null") == 2);
}

TEST_CASE("arrow experiment reports quadrant percentages that sum to one hundred") {
  spit("cli_arrow_spec.json",
       "{\"schema_version\":1,\"kind\":\"arrow_comparison\",\"sizes\":[[40,400]],"
       "\"n_targets\":8,\"n_replicates\":20,\"h\":2.0,\"seed\":19}\n");
  REQUIRE(run("experiment --spec cli_arrow_spec.json --out cli_arrow --jobs 2") == 0);
  json summary = slurp_json("cli_arrow/summary.json");
  REQUIRE(summary["quadrant_pct"].size() == 4);
  double total = 0.0;
  for (const auto& [name, pct] : summary["quadrant_pct"].items()) total += pct.get<double>();
  CHECK(total == doctest::Approx(100.0).epsilon(1e-6));
  check_against_schema("experiment_summary.schema.json", "cli_arrow/summary.json");
}

TEST_CASE("every json output validates against its shipped schema") {
  REQUIRE(run("simulate --n 30 --N 40 --seed 51 --out cli_schema_sim") == 0);
  check_against_schema("simulation_manifest.schema.json", "cli_schema_sim/manifest.json");

  // Conventional fit on the toy: null rectifier, no bias block requested.
  write_constant_toy("cli_schema_toy.csv", 30, 2.5);
  REQUIRE(run("infer --labeled cli_schema_toy.csv --features x --target 1.5 --h 2.0 "
              "--boot 30 --seed 5 --out cli_schema_con.json") == 0);
  check_against_schema("infer_report.schema.json", "cli_schema_con.json");

  // One dimension has the neighborhood mass for the plug-in bias terms.
  REQUIRE(run("infer --labeled cli_schema_toy.csv --features x --target 1.5 --h 2.0 "
              "--boot 30 --seed 5 --bias-correct --out cli_schema_bias.json") == 0);
  check_against_schema("infer_report.schema.json", "cli_schema_bias.json");
  CHECK(slurp_json("cli_schema_bias.json")["bias_correction"]["available"] == true);

  // Ten dimensions at this size cannot: the unavailable branch of the block.
  const std::string sim_base =
      "infer --labeled cli_schema_sim/labeled.csv --unlabeled cli_schema_sim/unlabeled.csv "
      "--predictor noisy-oracle --target-row 4 --h 1.5 --boot 25 --seed 7 --bias-correct ";
  REQUIRE(run(sim_base + "--method ppi --out cli_schema_ppi.json") == 0);
  check_against_schema("infer_report.schema.json", "cli_schema_ppi.json");
  CHECK(slurp_json("cli_schema_ppi.json")["bias_correction"]["available"] == false);
  REQUIRE(run(sim_base + "--method hd --out cli_schema_hd.json") == 0);
  check_against_schema("infer_report.schema.json", "cli_schema_hd.json");

  spit("cli_schema_cov_spec.json",
       "{\"schema_version\":1,\"kind\":\"coverage\",\"sizes\":[[30,300]],"
       "\"n_targets\":3,\"n_replicates\":10,\"h\":2.0,\"seed\":23}\n");
  REQUIRE(run("experiment --spec cli_schema_cov_spec.json --out cli_schema_cov") == 0);
  check_against_schema("experiment_summary.schema.json", "cli_schema_cov/summary.json");

  spit("cli_schema_scatter_spec.json",
       "{\"schema_version\":1,\"kind\":\"error_scatter\",\"sizes\":[[30,300]],"
       "\"n_targets\":3,\"n_replicates\":10,\"h\":2.0,\"seed\":29}\n");
  REQUIRE(run("experiment --spec cli_schema_scatter_spec.json --out cli_schema_scatter") == 0);
  check_against_schema("experiment_summary.schema.json", "cli_schema_scatter/summary.json");

  REQUIRE(run("pca --input cli_schema_sim/labeled.csv --label-col y --components 2 "
              "--out cli_schema_pca.csv --model-out cli_schema_pca.json") == 0);
  check_against_schema("pca_model.schema.json", "cli_schema_pca.json");

  REQUIRE(run("predict-quality --data cli_schema_toy.csv --prediction-col f "
              "--out cli_schema_quality.json") == 0);
  check_against_schema("quality_report.schema.json", "cli_schema_quality.json");
}

TEST_CASE("knn leakage is refused unless allowed") {
  REQUIRE(run("simulate --n 40 --N 30 --seed 41 --out cli_sim_knn") == 0);
  const std::string base =
      "infer --labeled cli_sim_knn/labeled.csv --unlabeled cli_sim_knn/unlabeled.csv "
      "--predictor knn --knn-k 3 --method ppi --target-row 1 --h 1.5 --boot 20 --seed 8 ";
  CHECK(run(base + "2>/dev/null") == 2);
  CHECK(run(base + "--allow-leakage --out cli_knn.json") == 0);
  json report = slurp_json("cli_knn.json");
  CHECK(report["config"]["knn_k"] == 3);
  CHECK(report["fit"]["method"] == "ppi");
}

}  // TEST_SUITE
