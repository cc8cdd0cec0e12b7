#include "flg/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

namespace flg {
namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct RunOptions {
  std::string config;
  std::string seed_list;
  std::string strategy;
  std::string out;
  std::string scatter_labels;
  bool stratified = false;
  bool high_only = false;
  double holdout = -1;
  int patch = -1;
};

struct SynthOptions {
  int classes = 3;
  int bands = 20;
  std::string size = "64x64";
  std::uint64_t seed = 1;
  std::string out;
  double noise = SynthSpec{}.noise_sigma;
  double separation = SynthSpec{}.separation;
  int tile = SynthSpec{}.tile;
};

struct ReportOptions {
  std::string in;
  std::string metric = "oa";
  std::string out;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

int cmd_run(const RunOptions& opt) {
  ExperimentConfig config;
  try {
    config = load_config(opt.config);
    if (!opt.seed_list.empty()) config.seeds = parse_seed_list(opt.seed_list);
    if (!opt.strategy.empty()) {
      try {
        config.strategies = {parse_strategy(opt.strategy)};
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (!opt.out.empty()) config.out = opt.out;
    if (opt.stratified) config.al.stratified = true;
    if (opt.high_only) config.al.high_only = true;
    if (!opt.scatter_labels.empty()) {
      if (opt.scatter_labels == "actual") config.al.scatter_labels = ScatterLabels::actual;
      else if (opt.scatter_labels == "predicted") config.al.scatter_labels = ScatterLabels::predicted;
      else throw ConfigError("--scatter-labels must be 'actual' or 'predicted'");
    }
    if (opt.holdout >= 0) config.al.holdout = opt.holdout;
    if (opt.patch >= 0) config.al.patch = opt.patch;
    validate_config(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    const HsiCube cube = prepare_cube(config);
    const auto runs = run_cells(cube, config);
    write_outputs(config, runs);
    std::cerr << "wrote " << (config.out / "curves.csv").string() << " (" << runs.size() << " runs)\n";
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int cmd_synth(const SynthOptions& opt) {
  SynthSpec spec;
  try {
    static const std::regex size_re(R"((\d+)[xX](\d+))");
    std::smatch m;
    if (!std::regex_match(opt.size, m, size_re)) throw ConfigError("--size must look like MxN");
    spec.classes = opt.classes;
    spec.bands = opt.bands;
    spec.height = std::stoi(m[1]);
    spec.width = std::stoi(m[2]);
    spec.noise_sigma = opt.noise;
    spec.separation = opt.separation;
    spec.tile = opt.tile;
    if (spec.classes < 2 || spec.bands < 1 || spec.height < 1 || spec.width < 1)
      throw ConfigError("synth dimensions out of range");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    std::filesystem::path out = opt.out;
    if (out.extension() != ".json") out += ".json";
    if (out.has_parent_path() && !std::filesystem::is_directory(out.parent_path()))
      throw DataError("output directory does not exist: " + out.parent_path().string());
    save_cube(synth_generate(spec, opt.seed), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int cmd_report(const ReportOptions& opt) {
  std::vector<ReportPoint> points;
  try {
    std::ifstream in(opt.in);
    if (!in) throw std::runtime_error("cannot read " + opt.in);
    points = aggregate_curves(read_curves(in), opt.metric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const std::filesystem::path dir =
        opt.out.empty() ? std::filesystem::path(opt.in).parent_path() : std::filesystem::path(opt.out);
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream csv(dir / ("report_" + opt.metric + ".csv"), std::ios::binary);
    std::ofstream txt(dir / ("report_" + opt.metric + ".txt"), std::ios::binary);
    if (!csv || !txt) throw std::runtime_error("cannot write report into " + dir.string());
    write_report_csv(csv, points);
    write_report_table(txt, points, opt.metric);
    write_report_table(std::cout, points, opt.metric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Fuzziness-based active learning for hyperspectral classification"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run active-learning experiments from a config file");
  run_cmd->add_option("--config", run.config, "Experiment config (JSON)")->required();
  run_cmd->add_option("--seed-list", run.seed_list, "Comma-separated seeds, overrides the config");
  run_cmd->add_option("--strategy", run.strategy, "flg | random | fuzziness-only, overrides the config");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_flag("--stratified", run.stratified, "Class-balanced initial split");
  run_cmd->add_flag("--high-only", run.high_only, "Take candidates from the high-fuzziness group only");
  run_cmd->add_option("--scatter-labels", run.scatter_labels, "actual | predicted");
  run_cmd->add_option("--holdout", run.holdout, "Fraction of labeled pixels kept as a fixed evaluation set");
  run_cmd->add_option("--patch", run.patch, "Odd patch window enabling the multilinear path (0 = off)");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic cube");
  synth_cmd->add_option("--classes", synth.classes, "Number of classes");
  synth_cmd->add_option("--bands", synth.bands, "Number of bands");
  synth_cmd->add_option("--size", synth.size, "Raster size MxN");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--noise", synth.noise, "Per-band noise standard deviation");
  synth_cmd->add_option("--separation", synth.separation, "Spread of class means");
  synth_cmd->add_option("--tile", synth.tile, "Side of the label tiles");
  synth_cmd->add_option("--out", synth.out, "Output header path (<stem>.json)")->required();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Aggregate curves.csv into mean/std curves");
  report_cmd->add_option("--in", report.in, "curves.csv")->required();
  report_cmd->add_option("--metric", report.metric, "oa | aa | kappa | precision | recall | f1")
      ->check(CLI::IsMember({"oa", "aa", "kappa", "precision", "recall", "f1"}));
  report_cmd->add_option("--out", report.out, "Output directory (defaults to the input's directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run_cmd) return cmd_run(run);
  if (*synth_cmd) return cmd_synth(synth);
  return cmd_report(report);
}

}  // namespace flg
