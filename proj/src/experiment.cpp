#include "flg/experiment.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace flg {
namespace {

using nlohmann::json;

template <class T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "'");
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key)) throw ConfigError("config: unknown key '" + where + key + "'");
}

SynthSpec parse_synth(const json& j, std::uint64_t& seed) {
  reject_unknown(j, {"classes", "bands", "height", "width", "noise_sigma", "band_correlation", "tile", "separation", "seed"},
                 "synth.");
  SynthSpec s;
  if (j.contains("classes")) s.classes = get_as<int>(j["classes"], "synth.classes");
  if (j.contains("bands")) s.bands = get_as<int>(j["bands"], "synth.bands");
  if (j.contains("height")) s.height = get_as<int>(j["height"], "synth.height");
  if (j.contains("width")) s.width = get_as<int>(j["width"], "synth.width");
  if (j.contains("noise_sigma")) s.noise_sigma = get_as<double>(j["noise_sigma"], "synth.noise_sigma");
  if (j.contains("band_correlation")) s.band_correlation = get_as<double>(j["band_correlation"], "synth.band_correlation");
  if (j.contains("tile")) s.tile = get_as<int>(j["tile"], "synth.tile");
  if (j.contains("separation")) s.separation = get_as<double>(j["separation"], "synth.separation");
  if (j.contains("seed")) seed = get_as<std::uint64_t>(j["seed"], "synth.seed");
  return s;
}

ClassifierConfig parse_classifier(const json& j) {
  reject_unknown(j, {"algorithm", "k", "distance_weighted", "hidden_nodes", "elm_ridge", "mlr_l2", "mlr_epochs",
                     "mlr_step", "svm_epochs", "svm_lambda"},
                 "classifier.");
  ClassifierConfig c;
  if (j.contains("algorithm")) {
    try {
      c.algorithm = parse_algorithm(get_as<std::string>(j["algorithm"], "classifier.algorithm"));
    } catch (const ClassifierError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("k")) c.k = get_as<int>(j["k"], "classifier.k");
  if (j.contains("distance_weighted")) c.distance_weighted = get_as<bool>(j["distance_weighted"], "classifier.distance_weighted");
  if (j.contains("hidden_nodes")) c.hidden_nodes = get_as<int>(j["hidden_nodes"], "classifier.hidden_nodes");
  if (j.contains("elm_ridge")) c.elm_ridge = get_as<double>(j["elm_ridge"], "classifier.elm_ridge");
  if (j.contains("mlr_l2")) c.mlr_l2 = get_as<double>(j["mlr_l2"], "classifier.mlr_l2");
  if (j.contains("mlr_epochs")) c.mlr_epochs = get_as<int>(j["mlr_epochs"], "classifier.mlr_epochs");
  if (j.contains("mlr_step")) c.mlr_step = get_as<double>(j["mlr_step"], "classifier.mlr_step");
  if (j.contains("svm_epochs")) c.svm_epochs = get_as<int>(j["svm_epochs"], "classifier.svm_epochs");
  if (j.contains("svm_lambda")) c.svm_lambda = get_as<double>(j["svm_lambda"], "classifier.svm_lambda");
  return c;
}

Strategy strategy_from(const std::string& name) {
  try {
    return parse_strategy(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_number(v[i]);
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f", value);
  return buf;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc, {"dataset", "synth", "normalize", "classifier", "n", "h", "K", "threshold", "omega", "lambda",
                       "psi", "k1", "k2", "d", "strategies", "seeds", "stratified", "high_only", "scatter_labels",
                       "holdout", "patch", "patch_rank", "histogram_bins", "out", "diagnostics", "timing_in_curves"},
                 "");
  ExperimentConfig c;
  if (doc.contains("dataset")) {
    std::filesystem::path p = get_as<std::string>(doc["dataset"], "dataset");
    c.dataset = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (doc.contains("synth")) c.synth = parse_synth(doc["synth"], c.synth_seed);
  if (c.dataset && c.synth) throw ConfigError("config: give either 'dataset' or 'synth', not both");
  if (!c.dataset && !c.synth) throw ConfigError("config: one of 'dataset' or 'synth' is required");
  if (doc.contains("normalize")) c.normalize = get_as<bool>(doc["normalize"], "normalize");
  if (doc.contains("classifier")) c.al.classifier = parse_classifier(doc["classifier"]);

  auto& al = c.al;
  if (doc.contains("n")) al.initial = get_as<int>(doc["n"], "n");
  if (doc.contains("h")) al.batch = get_as<int>(doc["h"], "h");
  if (doc.contains("K")) al.candidates = get_as<int>(doc["K"], "K");
  if (doc.contains("threshold")) al.threshold = get_as<int>(doc["threshold"], "threshold");
  if (doc.contains("omega")) al.params.omega = get_as<double>(doc["omega"], "omega");
  if (doc.contains("lambda")) al.params.lambda = get_as<double>(doc["lambda"], "lambda");
  if (doc.contains("psi")) al.params.psi = get_as<double>(doc["psi"], "psi");
  if (doc.contains("k1")) al.k1 = get_as<int>(doc["k1"], "k1");
  if (doc.contains("k2")) al.k2 = get_as<int>(doc["k2"], "k2");
  if (doc.contains("d")) al.projection_dim = get_as<int>(doc["d"], "d");
  if (doc.contains("stratified")) al.stratified = get_as<bool>(doc["stratified"], "stratified");
  if (doc.contains("high_only")) al.high_only = get_as<bool>(doc["high_only"], "high_only");
  if (doc.contains("scatter_labels")) {
    const auto v = get_as<std::string>(doc["scatter_labels"], "scatter_labels");
    if (v == "actual") al.scatter_labels = ScatterLabels::actual;
    else if (v == "predicted") al.scatter_labels = ScatterLabels::predicted;
    else throw ConfigError("config: scatter_labels must be 'actual' or 'predicted'");
  }
  if (doc.contains("holdout")) al.holdout = get_as<double>(doc["holdout"], "holdout");
  if (doc.contains("patch")) al.patch = get_as<int>(doc["patch"], "patch");
  if (doc.contains("patch_rank")) al.patch_rank = get_as<int>(doc["patch_rank"], "patch_rank");
  if (doc.contains("histogram_bins")) al.histogram_bins = get_as<int>(doc["histogram_bins"], "histogram_bins");

  if (doc.contains("strategies")) {
    c.strategies.clear();
    for (const auto& s : get_as<std::vector<std::string>>(doc["strategies"], "strategies"))
      c.strategies.push_back(strategy_from(s));
  }
  if (doc.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(doc["seeds"], "seeds");
  if (doc.contains("out")) c.out = get_as<std::string>(doc["out"], "out");
  if (doc.contains("diagnostics")) c.diagnostics = get_as<bool>(doc["diagnostics"], "diagnostics");
  if (doc.contains("timing_in_curves")) c.timing_in_curves = get_as<bool>(doc["timing_in_curves"], "timing_in_curves");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  if (c.dataset) j["dataset"] = c.dataset->string();
  if (c.synth) {
    const auto& s = *c.synth;
    j["synth"] = {{"classes", s.classes},       {"bands", s.bands},
                  {"height", s.height},         {"width", s.width},
                  {"noise_sigma", s.noise_sigma}, {"band_correlation", s.band_correlation},
                  {"tile", s.tile},             {"separation", s.separation},
                  {"seed", c.synth_seed}};
  }
  const auto& cl = c.al.classifier;
  j["normalize"] = c.normalize;
  j["classifier"] = {{"algorithm", std::string(to_string(cl.algorithm))},
                     {"k", cl.k},
                     {"distance_weighted", cl.distance_weighted},
                     {"hidden_nodes", cl.hidden_nodes},
                     {"elm_ridge", cl.elm_ridge},
                     {"mlr_l2", cl.mlr_l2},
                     {"mlr_epochs", cl.mlr_epochs},
                     {"mlr_step", cl.mlr_step},
                     {"svm_epochs", cl.svm_epochs},
                     {"svm_lambda", cl.svm_lambda}};
  const auto& al = c.al;
  j["n"] = al.initial;
  j["h"] = al.batch;
  j["K"] = al.candidate_cap();
  j["threshold"] = al.threshold;
  j["omega"] = al.params.omega;
  j["lambda"] = al.params.lambda;
  j["psi"] = al.params.psi;
  j["k1"] = al.k1;
  j["k2"] = al.k2;
  j["d"] = al.projection_dim;
  j["stratified"] = al.stratified;
  j["high_only"] = al.high_only;
  j["scatter_labels"] = al.scatter_labels == ScatterLabels::actual ? "actual" : "predicted";
  j["holdout"] = al.holdout;
  j["patch"] = al.patch;
  j["patch_rank"] = al.patch_rank;
  j["histogram_bins"] = al.histogram_bins;
  std::vector<std::string> strategies;
  for (auto s : c.strategies) strategies.emplace_back(to_string(s));
  j["strategies"] = strategies;
  j["seeds"] = c.seeds;
  j["out"] = c.out.string();
  j["diagnostics"] = c.diagnostics;
  j["timing_in_curves"] = c.timing_in_curves;
  return j;
}

void validate_config(const ExperimentConfig& c) {
  if (c.dataset) {
    const auto files = CubeFiles::from_header(*c.dataset);
    for (const auto& p : {files.header, files.payload, files.label_header, files.label_payload})
      if (!std::filesystem::exists(p)) throw ConfigError("dataset file not found: " + p.string());
  }
  if (c.synth) {
    if (c.synth->classes < 2 || c.synth->bands < 1 || c.synth->height < 1 || c.synth->width < 1)
      throw ConfigError("config: invalid synth dimensions");
  }
  if (c.strategies.empty()) throw ConfigError("config: no strategies");
  if (c.seeds.empty()) throw ConfigError("config: no seeds");
  if (c.out.empty()) throw ConfigError("config: empty output directory");
  const int classes = c.synth ? c.synth->classes : std::max(c.al.classifier.classes, 2);
  try {
    c.al.validate(classes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

HsiCube prepare_cube(const ExperimentConfig& c) {
  HsiCube cube = c.dataset ? load_cube(*c.dataset) : synth_generate(*c.synth, c.synth_seed);
  return c.normalize ? normalize(cube) : cube;
}

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("FLG_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) return std::min(cap, hw);
  }
  return hw;
}

std::vector<RunResult> run_cells(const HsiCube& cube, const ExperimentConfig& config) {
  struct Cell {
    Strategy strategy;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto s : config.strategies)
    for (auto seed : config.seeds) cells.push_back({s, seed});

  std::vector<RunResult> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        ALConfig al = config.al;
        al.strategy = cells[i].strategy;
        results[i] = al.strategy == Strategy::flg ? run_experiment(cube, al, cells[i].seed)
                                                  : run_baseline(cube, al, cells[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(worker_count(), static_cast<int>(cells.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

void write_curves(std::ostream& out, const std::vector<RunResult>& runs, bool with_timing) {
  out << kCurvesHeader << '\n';
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      out << run.seed << ',' << r.iteration << ',' << r.train_size << ',' << format_number(r.oa) << ','
          << format_number(r.aa) << ',' << format_number(r.kappa) << ',' << format_number(r.precision) << ','
          << format_number(r.recall) << ',' << format_number(r.f1) << ','
          << format_number(with_timing ? r.duration_ms : 0.0) << ',' << to_string(run.strategy) << '\n';
    }
  }
}

void write_summary(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "strategy,runs,train_size_mean,oa_mean,oa_std,aa_mean,aa_std,kappa_mean,kappa_std,precision_mean,"
         "precision_std,recall_mean,recall_std,f1_mean,f1_std\n";
  std::vector<Strategy> order;
  for (const auto& r : runs)
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
  for (auto s : order) {
    std::vector<double> ts, oa, aa, kappa, precision, recall, f1;
    for (const auto& run : runs) {
      if (run.strategy != s || run.records.empty()) continue;
      const auto& last = run.records.back();
      ts.push_back(last.train_size);
      oa.push_back(last.oa);
      aa.push_back(last.aa);
      kappa.push_back(last.kappa);
      precision.push_back(last.precision);
      recall.push_back(last.recall);
      f1.push_back(last.f1);
    }
    out << to_string(s) << ',' << oa.size() << ',' << format_number(mean_std(ts).mean);
    for (const auto* v : {&oa, &aa, &kappa, &precision, &recall, &f1}) {
      const auto m = mean_std(*v);
      out << ',' << format_number(m.mean) << ',' << format_number(m.std);
    }
    out << '\n';
  }
}

void write_timing(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "strategy,seed,iteration,train_size,duration_ms\n";
  for (const auto& run : runs)
    for (const auto& r : run.records)
      out << to_string(run.strategy) << ',' << run.seed << ',' << r.iteration << ',' << r.train_size << ','
          << format_number(r.duration_ms) << '\n';
}

void write_fuzziness_histograms(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "strategy,seed,iteration,bin,count\n";
  for (const auto& run : runs)
    for (const auto& r : run.records)
      for (std::size_t b = 0; b < r.fuzziness_histogram.size(); ++b)
        out << to_string(run.strategy) << ',' << run.seed << ',' << r.iteration << ',' << b << ','
            << r.fuzziness_histogram[b] << '\n';
}

void write_selections(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "strategy,seed,iteration,candidates,fallback,q1,q2,min_pairwise_distance,selected,objective_spectrum\n";
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      out << to_string(run.strategy) << ',' << run.seed << ',' << r.iteration << ',' << r.candidate_count << ','
          << (r.fallback ? 1 : 0) << ',' << (r.q1 ? format_number(*r.q1) : "") << ','
          << (r.q2 ? format_number(*r.q2) : "") << ',' << format_number(r.min_pairwise_distance) << ','
          << join(r.selected) << ',' << join(r.objective_spectrum) << '\n';
    }
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << '\n';
  }
}

void write_outputs(const ExperimentConfig& config, const std::vector<RunResult>& runs) {
  std::filesystem::create_directories(config.out);
  write_file(config.out / "curves.csv", [&](std::ostream& o) { write_curves(o, runs, config.timing_in_curves); });
  write_file(config.out / "summary.csv", [&](std::ostream& o) { write_summary(o, runs); });
  write_file(config.out / "timing.csv", [&](std::ostream& o) { write_timing(o, runs); });
  if (config.diagnostics) {
    write_file(config.out / "fuzziness_hist.csv", [&](std::ostream& o) { write_fuzziness_histograms(o, runs); });
    write_file(config.out / "selection.csv", [&](std::ostream& o) { write_selections(o, runs); });
  }
  json meta;
  meta["config"] = config_to_json(config);
  meta["versions"] = {{"flg", "0.1.0"},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                      {"compiler", __VERSION__}};
  write_file(config.out / "meta.json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
}

double CurveRow::metric(const std::string& name) const {
  if (name == "oa") return oa;
  if (name == "aa") return aa;
  if (name == "kappa") return kappa;
  if (name == "precision") return precision;
  if (name == "recall") return recall;
  if (name == "f1") return f1;
  if (name == "duration_ms") return duration_ms;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

std::vector<CurveRow> read_curves(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("curves: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurvesHeader) throw std::runtime_error("curves: unexpected header");
  std::vector<CurveRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw std::runtime_error("curves: wrong field count on line " + std::to_string(lineno));
    CurveRow r;
    try {
      std::size_t used = 0;
      auto num = [&](const std::string& s) {
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      };
      r.seed = std::stoull(f[0]);
      r.iteration = static_cast<int>(num(f[1]));
      r.train_size = static_cast<int>(num(f[2]));
      r.oa = num(f[3]);
      r.aa = num(f[4]);
      r.kappa = num(f[5]);
      r.precision = num(f[6]);
      r.recall = num(f[7]);
      r.f1 = num(f[8]);
      r.duration_ms = num(f[9]);
    } catch (const std::exception&) {
      throw std::runtime_error("curves: malformed number on line " + std::to_string(lineno));
    }
    r.strategy = f[10];
    if (r.strategy.empty()) throw std::runtime_error("curves: empty strategy on line " + std::to_string(lineno));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportPoint> aggregate_curves(const std::vector<CurveRow>& rows, const std::string& metric) {
  // (strategy, iteration) -> rows sorted by seed, so sums do not depend on input order.
  std::map<std::pair<std::string, int>, std::vector<const CurveRow*>> groups;
  for (const auto& r : rows) {
    (void)r.metric(metric);
    groups[{r.strategy, r.iteration}].push_back(&r);
  }
  std::vector<ReportPoint> out;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [](const CurveRow* a, const CurveRow* b) {
      if (a->seed != b->seed) return a->seed < b->seed;
      return a->train_size < b->train_size;
    });
    std::vector<double> values, sizes;
    for (const auto* m : members) {
      values.push_back(m->metric(metric));
      sizes.push_back(m->train_size);
    }
    const auto s = mean_std(values);
    out.push_back({key.first, key.second, mean_std(sizes).mean, s.mean, s.std, static_cast<int>(members.size())});
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportPoint>& points) {
  out << "strategy,iteration,train_size,mean,std,runs\n";
  for (const auto& p : points)
    out << p.strategy << ',' << p.iteration << ',' << format_number(p.train_size) << ',' << format_number(p.mean)
        << ',' << format_number(p.std) << ',' << p.runs << '\n';
}

void write_report_table(std::ostream& out, const std::vector<ReportPoint>& points, const std::string& metric) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %9s %11s %10s %10s %5s\n", "strategy", "iteration", "train_size",
                (metric + "_mean").c_str(), (metric + "_std").c_str(), "runs");
  out << buf;
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%-16s %9d %11.1f %10.4f %10.4f %5d\n", p.strategy.c_str(), p.iteration,
                  p.train_size, p.mean, p.std, p.runs);
    out << buf;
  }
}

}  // namespace flg
