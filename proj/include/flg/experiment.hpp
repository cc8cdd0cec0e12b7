#pragma once

#include "flg/al_loop.hpp"
#include "flg/data.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flg {

/// Bad or inconsistent experiment configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> dataset;
  std::optional<SynthSpec> synth;
  std::uint64_t synth_seed = 1;
  bool normalize = true;
  ALConfig al;
  std::vector<Strategy> strategies{Strategy::flg};
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path out = "results";
  bool diagnostics = false;
  bool timing_in_curves = false;
};

/// Parses the JSON config document; unknown keys are rejected. Relative
/// dataset paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Checks paths and value ranges before anything is written.
void validate_config(const ExperimentConfig& config);

HsiCube prepare_cube(const ExperimentConfig& config);

/// One (strategy, seed) cell per entry, in strategy-major order.
std::vector<RunResult> run_cells(const HsiCube& cube, const ExperimentConfig& config);

/// Worker cap from FLG_THREADS, else hardware concurrency.
int worker_count();

inline const char* kCurvesHeader = "seed,iteration,train_size,oa,aa,kappa,precision,recall,f1,duration_ms,strategy";

void write_curves(std::ostream& out, const std::vector<RunResult>& runs, bool with_timing);
void write_summary(std::ostream& out, const std::vector<RunResult>& runs);
void write_timing(std::ostream& out, const std::vector<RunResult>& runs);
void write_fuzziness_histograms(std::ostream& out, const std::vector<RunResult>& runs);
void write_selections(std::ostream& out, const std::vector<RunResult>& runs);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

/// Writes curves.csv, summary.csv, timing.csv, meta.json (and diagnostics
/// when enabled) into config.out.
void write_outputs(const ExperimentConfig& config, const std::vector<RunResult>& runs);

struct CurveRow {
  std::uint64_t seed = 0;
  int iteration = 0;
  int train_size = 0;
  double oa = 0, aa = 0, kappa = 0, precision = 0, recall = 0, f1 = 0, duration_ms = 0;
  std::string strategy;

  double metric(const std::string& name) const;
};

/// Parses a curves.csv stream; throws std::runtime_error on malformed input.
std::vector<CurveRow> read_curves(std::istream& in);

struct ReportPoint {
  std::string strategy;
  int iteration = 0;
  double train_size = 0;
  double mean = 0;
  double std = 0;
  int runs = 0;
};

/// Per-strategy mean +- std curve of `metric`, independent of row order.
std::vector<ReportPoint> aggregate_curves(const std::vector<CurveRow>& rows, const std::string& metric);
void write_report_csv(std::ostream& out, const std::vector<ReportPoint>& points);
void write_report_table(std::ostream& out, const std::vector<ReportPoint>& points, const std::string& metric);

std::string format_number(double value);

/// Command-line front end; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace flg
