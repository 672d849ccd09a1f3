// rttlens: decompose RTT matrices into expected latency plus inflation,
// explain delay-space rank by endpoint features, and flag inflated paths.
//
// Exit codes: 0 success, 2 input or usage error, 3 solver non-convergence
// (decompose only; outputs are still written).

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rttlens/anomaly.hpp"
#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"
#include "rttlens/heatmap.hpp"
#include "rttlens/latency_matrix.hpp"
#include "rttlens/rank_analysis.hpp"
#include "rttlens/synthetic.hpp"
#include "rttlens/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
  // filters
  double tau = 1.0;
  double abs_ms = 30.0;
  bool abs_all = false;
  double severity_floor_ms = 10.0;
  double expected_floor_ms = 0.1;
  // solver
  std::optional<double> lambda;
  double tolerance = 1e-7;
  int max_iters = 1000;
  // ingestion
  int min_ips = 10;
  bool interpolate = false;
  std::string matrix_csv;
  std::string measurements;
  std::string prefixes;
  std::string source_tags;
  std::string dest_tags;
  std::string ip_prefix;
  // misc
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config_path;
  // rank-analysis
  int submatrices = 0;
  int min_dim = 5;
  // synth
  std::string spec_path;
  bool bench = false;
  int bench_seeds = 20;
  // decompose
  bool per_file_scale = false;
};

std::string iso_utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Config file knobs mirror the long flags; flags given on the command line win.
void apply_config_file(const std::string& path, CliOptions& opt) {
  std::ifstream in(path);
  if (!in) throw rttlens::IoError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw rttlens::FormatError(path + ": " + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "tau") {
        opt.tau = value.get<double>();
      } else if (key == "abs_ms") {
        opt.abs_ms = value.get<double>();
      } else if (key == "abs_all") {
        opt.abs_all = value.get<bool>();
      } else if (key == "severity_floor_ms") {
        opt.severity_floor_ms = value.get<double>();
      } else if (key == "expected_floor_ms") {
        opt.expected_floor_ms = value.get<double>();
      } else if (key == "lambda") {
        opt.lambda = value.get<double>();
      } else if (key == "tolerance") {
        opt.tolerance = value.get<double>();
      } else if (key == "max_iters") {
        opt.max_iters = value.get<int>();
      } else if (key == "min_ips") {
        opt.min_ips = value.get<int>();
      } else if (key == "interpolate") {
        opt.interpolate = value.get<bool>();
      } else if (key == "seed") {
        opt.seed = value.get<std::uint64_t>();
      } else if (key == "out_dir") {
        opt.out_dir = value.get<std::string>();
      } else {
        throw rttlens::FormatError(path + ": unknown config key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw rttlens::FormatError(path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

rttlens::SolverOptions solver_options(const CliOptions& opt) {
  rttlens::SolverOptions s;
  s.lambda = opt.lambda;
  s.tolerance = opt.tolerance;
  s.max_iterations = opt.max_iters;
  return s;
}

rttlens::FilterConfig filter_config(const CliOptions& opt) {
  rttlens::FilterConfig cfg;
  cfg.tau = opt.tau;
  cfg.cross_continent_abs_ms = opt.abs_ms;
  cfg.severity_floor_ms = opt.severity_floor_ms;
  cfg.expected_floor_ms = opt.expected_floor_ms;
  return cfg;
}

json config_echo(const CliOptions& opt) {
  json j;
  j["solver"] = {{"lambda", opt.lambda ? json(*opt.lambda) : json(nullptr)},
                 {"tolerance", opt.tolerance},
                 {"max_iterations", opt.max_iters}};
  j["filter"] = {{"tau", opt.tau},
                 {"cross_continent_abs_ms", opt.abs_ms},
                 {"absolute_all_cells", opt.abs_all},
                 {"severity_floor_ms", opt.severity_floor_ms},
                 {"expected_floor_ms", opt.expected_floor_ms}};
  j["ingest"] = {{"min_ips", opt.min_ips},
                 {"interpolate", opt.interpolate},
                 {"ip_prefix", opt.ip_prefix}};
  j["seed"] = opt.seed;
  return j;
}

json inputs_echo(const CliOptions& opt) {
  json j = json::object();
  if (!opt.matrix_csv.empty()) j["matrix"] = opt.matrix_csv;
  if (!opt.measurements.empty()) j["measurements"] = opt.measurements;
  if (!opt.prefixes.empty()) j["prefixes"] = opt.prefixes;
  if (!opt.source_tags.empty()) j["source_tags"] = opt.source_tags;
  if (!opt.dest_tags.empty()) j["dest_tags"] = opt.dest_tags;
  if (!opt.spec_path.empty()) j["spec"] = opt.spec_path;
  if (!opt.config_path.empty()) j["config"] = opt.config_path;
  return j;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const CliOptions& opt,
                    const std::string& started_at, const std::vector<fs::path>& outputs,
                    const std::vector<std::string>& warnings, const json& stats) {
  json j;
  j["version"] = rttlens::kVersion;
  j["command"] = command;
  j["started_at"] = started_at;
  j["finished_at"] = iso_utc_now();
  j["inputs"] = inputs_echo(opt);
  j["config"] = config_echo(opt);
  j["outputs"] = json::array();
  for (const auto& p : outputs) j["outputs"].push_back(p.string());
  j["outputs"].push_back((out_dir / "manifest.json").string());
  j["warnings"] = warnings;
  j["stats"] = stats;
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw rttlens::IoError("cannot write " + (out_dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

// Full-grid wrapper so solver factors reuse the matrix CSV format.
rttlens::LatencyMatrix wrap_full(const Eigen::MatrixXd& values,
                                 const rttlens::LatencyMatrix& like) {
  rttlens::LatencyMatrix m;
  m.values = values;
  m.mask = rttlens::MaskMatrix::Constant(values.rows(), values.cols(),
                                         static_cast<std::uint8_t>(rttlens::MaskState::Observed));
  m.row_labels = like.row_labels;
  m.col_labels = like.col_labels;
  m.level = like.level;
  return m;
}

rttlens::LatencyMatrix load_matrix(const CliOptions& opt, std::vector<std::string>& warnings,
                                   json& stats) {
  std::optional<rttlens::TagDirectory> source_tags;
  std::optional<rttlens::DestinationTags> dest_tags;
  if (!opt.source_tags.empty()) {
    std::ifstream in(opt.source_tags);
    if (!in) throw rttlens::IoError("cannot read " + opt.source_tags);
    source_tags = rttlens::TagDirectory::load(in);
  }
  if (!opt.dest_tags.empty()) {
    std::ifstream in(opt.dest_tags);
    if (!in) throw rttlens::IoError("cannot read " + opt.dest_tags);
    dest_tags = rttlens::DestinationTags::load(in);
  }

  rttlens::LatencyMatrix x;
  if (!opt.matrix_csv.empty()) {
    x = rttlens::read_matrix_csv(opt.matrix_csv);
    const auto untagged = rttlens::attach_tags(x, source_tags ? &*source_tags : nullptr,
                                               dest_tags ? &*dest_tags : nullptr);
    if (!untagged.empty() && (source_tags || dest_tags)) {
      warnings.push_back(std::to_string(untagged.size()) + " ids have no tag entry");
    }
  } else if (!opt.measurements.empty()) {
    std::ifstream in(opt.measurements);
    if (!in) throw rttlens::IoError("cannot read " + opt.measurements);
    auto parsed = rttlens::parse_measurements(in);
    for (const auto& r : parsed.rejects) {
      warnings.push_back(opt.measurements + " line " + std::to_string(r.line_number) +
                         " rejected: " + r.reason);
    }
    stats["measurement_rows"] = parsed.records.size();
    stats["rejected_rows"] = parsed.rejects.size();
    const auto collapsed = rttlens::collapse_replicates(parsed.records);
    stats["collapsed_pairs"] = collapsed.size();
    if (!opt.ip_prefix.empty()) {
      const auto cidr = rttlens::Cidr::parse(opt.ip_prefix);
      if (!cidr) throw rttlens::InvalidInputError("invalid --ip-prefix '" + opt.ip_prefix + "'");
      x = rttlens::build_ip_matrix(collapsed, *cidr, source_tags ? &*source_tags : nullptr,
                                   dest_tags ? &*dest_tags : nullptr);
    } else {
      if (opt.prefixes.empty()) {
        throw rttlens::InvalidInputError(
            "aggregation needs --prefixes (or --ip-prefix for an IP-level matrix)");
      }
      std::ifstream pin(opt.prefixes);
      if (!pin) throw rttlens::IoError("cannot read " + opt.prefixes);
      const auto table = rttlens::PrefixTable::load(pin);
      x = rttlens::aggregate_to_prefix(collapsed, table, source_tags ? &*source_tags : nullptr,
                                       dest_tags ? &*dest_tags : nullptr, opt.min_ips);
    }
  } else {
    throw rttlens::InvalidInputError("give --matrix or --measurements");
  }

  stats["rows"] = x.rows();
  stats["cols"] = x.cols();
  stats["missing_before_interpolation"] = x.missing_count();
  if (opt.interpolate && x.missing_count() > 0) {
    auto [filled, report] = rttlens::interpolate_missing(x);
    x = std::move(filled);
    stats["interpolated_cells"] = report.filled;
    if (!report.unfilled.empty()) {
      warnings.push_back("interpolation left " + std::to_string(report.unfilled.size()) +
                         " cells missing (no donor in the (asn, city) group)");
    }
  }
  stats["missing"] = x.missing_count();
  if (x.missing_count() > 0) {
    warnings.push_back(std::to_string(x.missing_count()) +
                       " cells are missing and enter the solver as 0");
  }
  return x;
}

json decomposition_stats(const rttlens::Decomposition<double>& d) {
  return json{{"rank_L", d.rank_L},
              {"iterations", d.iterations},
              {"residual", d.residual},
              {"lambda", d.lambda_used},
              {"converged", d.converged}};
}

std::string matrix_id(const CliOptions& opt) {
  if (!opt.matrix_csv.empty()) return fs::path(opt.matrix_csv).filename().string();
  if (!opt.measurements.empty()) return fs::path(opt.measurements).filename().string();
  return "matrix";
}

int cmd_decompose(const CliOptions& opt, const std::string& started_at) {
  std::vector<std::string> warnings;
  json stats = json::object();
  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  const auto x = load_matrix(opt, warnings, stats);
  const auto d = rttlens::decompose(x, solver_options(opt));
  if (!d.converged) {
    warnings.push_back("solver did not converge within the iteration budget");
  }
  stats["decomposition"] = decomposition_stats(d);

  std::vector<fs::path> outputs;
  const auto write_grid = [&](const char* name, const rttlens::LatencyMatrix& m) {
    const fs::path p = out_dir / name;
    rttlens::write_matrix_csv(m, p);
    outputs.push_back(p);
    outputs.push_back(rttlens::mask_companion_path(p));
  };
  write_grid("X.csv", x);
  write_grid("L.csv", wrap_full(d.L, x));
  write_grid("S.csv", wrap_full(d.S, x));
  rttlens::write_heatmap_triple(x.values, d.L, d.S, out_dir, !opt.per_file_scale);
  outputs.push_back(out_dir / "X.pgm");
  outputs.push_back(out_dir / "L.pgm");
  outputs.push_back(out_dir / "S.pgm");

  write_manifest(out_dir, "decompose", opt, started_at, outputs, warnings, stats);
  return d.converged ? 0 : 3;
}

int cmd_detect(const CliOptions& opt, const std::string& started_at) {
  std::vector<std::string> warnings;
  json stats = json::object();
  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  const auto x = load_matrix(opt, warnings, stats);
  const auto cfg = filter_config(opt);
  std::optional<rttlens::AbsoluteScope> scope;
  if (opt.abs_all) scope = rttlens::AbsoluteScope::all_cells;
  auto result = rttlens::detect(x, solver_options(opt), cfg, scope);
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
  stats["decomposition"] = decomposition_stats(result.decomposition);
  stats["candidates"] = result.candidates.size();
  std::size_t below = 0;
  for (const auto& c : result.candidates) below += c.below_floor ? 1 : 0;
  stats["below_floor"] = below;

  std::vector<fs::path> outputs{out_dir / "candidates.csv", out_dir / "candidates.json"};
  rttlens::write_candidates_csv(result.candidates, outputs[0]);
  rttlens::write_candidates_json(result.candidates, matrix_id(opt), cfg, outputs[1]);

  write_manifest(out_dir, "detect", opt, started_at, outputs, warnings, stats);
  return 0;
}

int cmd_rank_analysis(const CliOptions& opt, const std::string& started_at) {
  std::vector<std::string> warnings;
  json stats = json::object();
  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  const auto x = load_matrix(opt, warnings, stats);
  // One row per sampled submatrix; with no sampling the report covers the
  // full matrix itself.
  std::vector<std::pair<std::string, rttlens::LatencyMatrix>> batch;
  if (opt.submatrices > 0) {
    auto subs = rttlens::submatrix_sample(x, opt.submatrices, opt.min_dim, opt.seed);
    for (std::size_t k = 0; k < subs.size(); ++k) {
      char id[16];
      std::snprintf(id, sizeof id, "sub%04zu", k);
      batch.emplace_back(id, std::move(subs[k]));
    }
  } else {
    batch.emplace_back("full", x);
  }
  const auto report = rttlens::rank_feature_report(batch, solver_options(opt));
  for (const auto& [id, message] : report.failures) {
    warnings.push_back("matrix " + id + " failed: " + message);
  }
  stats["matrices"] = batch.size();
  stats["failures"] = report.failures.size();
  const auto correlation = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  stats["pearson_rank_vs_geos"] = correlation(report.pearson_rank_vs_geos);
  stats["pearson_rank_vs_asns"] = correlation(report.pearson_rank_vs_asns);
  stats["pearson_rank_vs_pairs"] = correlation(report.pearson_rank_vs_pairs);

  std::vector<fs::path> outputs{out_dir / "rank_report.csv", out_dir / "rank_report.json"};
  rttlens::write_rank_report_csv(report, outputs[0]);
  rttlens::write_rank_report_json(report, outputs[1]);

  write_manifest(out_dir, "rank-analysis", opt, started_at, outputs, warnings, stats);
  return 0;
}

void write_synth_tag_files(const rttlens::LatencyMatrix& x, const fs::path& sources_path,
                           const fs::path& dests_path) {
  std::ofstream src(sources_path);
  if (!src) throw rttlens::IoError("cannot write " + sources_path.string());
  src << "source_id,asn,city,country,continent\n";
  for (const auto& l : x.row_labels) {
    const auto& t = *l.tag;
    src << l.id << ',' << t.asn << ',' << t.city << ',' << t.country << ','
        << rttlens::to_string(t.continent) << '\n';
  }
  std::ofstream dst(dests_path);
  if (!dst) throw rttlens::IoError("cannot write " + dests_path.string());
  dst << "prefix_or_ip,asn,city,country,continent\n";
  for (const auto& l : x.col_labels) {
    const auto& t = *l.tag;
    dst << l.id << ',' << t.asn << ',' << t.city << ',' << t.country << ','
        << rttlens::to_string(t.continent) << '\n';
  }
}

int cmd_synth(const CliOptions& opt, bool seed_given, const std::string& started_at) {
  std::vector<std::string> warnings;
  json stats = json::object();
  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  auto spec = rttlens::read_spec_json(opt.spec_path);
  if (seed_given) spec.seed = opt.seed;

  auto [x, truth] = rttlens::generate(spec);
  stats["rows"] = x.rows();
  stats["cols"] = x.cols();
  stats["missing"] = x.missing_count();
  stats["anomalies"] = truth.anomaly_cells.size();
  stats["truth_rank_L0"] = rttlens::numerical_rank(truth.L0, 1e-6);
  stats["seed"] = spec.seed;

  std::vector<fs::path> outputs;
  const auto write_grid = [&](const char* name, const rttlens::LatencyMatrix& m) {
    const fs::path p = out_dir / name;
    rttlens::write_matrix_csv(m, p);
    outputs.push_back(p);
    outputs.push_back(rttlens::mask_companion_path(p));
  };
  write_grid("X.csv", x);
  write_grid("L0.csv", wrap_full(truth.L0, x));
  write_grid("S0.csv", wrap_full(truth.S0, x));

  const fs::path anomalies_path = out_dir / "anomalies.csv";
  {
    std::ofstream out(anomalies_path);
    if (!out) throw rttlens::IoError("cannot write " + anomalies_path.string());
    out << "row,col,row_id,col_id,inflation_ms\n";
    for (const auto& [i, j] : truth.anomaly_cells) {
      out << i << ',' << j << ',' << x.row_labels[static_cast<std::size_t>(i)].id << ','
          << x.col_labels[static_cast<std::size_t>(j)].id << ','
          << rttlens::csv::format_double(truth.S0(i, j)) << '\n';
    }
  }
  outputs.push_back(anomalies_path);
  write_synth_tag_files(x, out_dir / "source_tags.csv", out_dir / "dest_tags.csv");
  outputs.push_back(out_dir / "source_tags.csv");
  outputs.push_back(out_dir / "dest_tags.csv");
  rttlens::write_spec_json(spec, out_dir / "spec.json");
  outputs.push_back(out_dir / "spec.json");

  if (opt.bench) {
    if (opt.bench_seeds < 1) throw rttlens::InvalidInputError("--bench-seeds must be positive");
    const auto cfg = filter_config(opt);
    const auto sopts = solver_options(opt);
    std::vector<rttlens::ScoreRow> rows;
    for (int k = 0; k < opt.bench_seeds; ++k) {
      auto sweep = spec;
      sweep.seed = spec.seed + static_cast<std::uint64_t>(k);
      auto [xs, ts] = rttlens::generate(sweep);
      if (opt.interpolate && xs.missing_count() > 0) {
        auto [filled, report] = rttlens::interpolate_missing(xs);
        xs = std::move(filled);
        if (!report.unfilled.empty()) {
          warnings.push_back("seed " + std::to_string(sweep.seed) + ": interpolation left " +
                             std::to_string(report.unfilled.size()) + " cells missing");
        }
      }
      const double floor = cfg.severity_floor_ms;

      const auto rpca = rttlens::detect(xs, sopts, cfg);
      rows.push_back({sweep.seed, "rpca", rttlens::score_detection(rpca.candidates, ts, floor)});

      const auto sigma_flags = rttlens::baseline_two_sigma(xs);
      rows.push_back({sweep.seed, "two_sigma", rttlens::score_detection(sigma_flags, ts, floor)});

      // PCA truncation rank: the exact truth rank when the model is noise
      // free, otherwise the 90% spectral-energy elbow of the truth.
      Eigen::Index k_pca = sweep.jitter_ms == 0 ? rttlens::numerical_rank(ts.L0, 1e-6)
                                                : rttlens::spectral_energy_rank(ts.L0, 0.9);
      k_pca = std::clamp<Eigen::Index>(k_pca, 1, std::min(xs.rows(), xs.cols()) - 1);
      const auto pca = rttlens::baseline_pca(xs, k_pca, cfg);
      rows.push_back({sweep.seed, "pca", rttlens::score_detection(pca.candidates, ts, floor)});
    }
    const fs::path scores_path = out_dir / "scores.csv";
    rttlens::write_scores_csv(rows, scores_path);
    outputs.push_back(scores_path);
    stats["bench_seeds"] = opt.bench_seeds;
    stats["bench_detectors"] = {"rpca", "two_sigma", "pca"};
  }

  write_manifest(out_dir, "synth", opt, started_at, outputs, warnings, stats);
  return 0;
}

void add_shared_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--tau", opt.tau, "Ratio-filter threshold");
  cmd->add_option("--abs-ms", opt.abs_ms, "Absolute-filter threshold in ms");
  cmd->add_flag("--abs-all", opt.abs_all, "Absolute filter on all cells, not just cross-continent");
  cmd->add_option("--severity-floor-ms", opt.severity_floor_ms,
                  "Inflations below this are kept but labeled below_floor");
  cmd->add_option("--expected-floor-ms", opt.expected_floor_ms,
                  "Denominator clamp for the inflation ratio");
  cmd->add_option("--lambda", opt.lambda, "Sparsity weight (default 1/sqrt(max(m,n)))");
  cmd->add_option("--tolerance", opt.tolerance, "Solver relative-residual stop");
  cmd->add_option("--max-iters", opt.max_iters, "Solver iteration budget");
  cmd->add_option("--min-ips", opt.min_ips, "Distinct IPs a prefix needs to become a column");
  cmd->add_flag("--interpolate", opt.interpolate, "Fill missing cells from (asn, city) donors");
  cmd->add_option("--seed", opt.seed, "Seed for sampling / generation");
  cmd->add_option("--out-dir", opt.out_dir, "Output directory");
  cmd->add_option("--config", opt.config_path, "JSON config file (flags win over it)");
}

void add_input_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--matrix", opt.matrix_csv, "Matrix grid CSV (with optional .mask.csv)");
  cmd->add_option("--measurements", opt.measurements, "Raw measurement CSV");
  cmd->add_option("--prefixes", opt.prefixes, "Prefix table for aggregation");
  cmd->add_option("--source-tags", opt.source_tags, "Source endpoint tag CSV");
  cmd->add_option("--dest-tags", opt.dest_tags, "Destination endpoint tag CSV");
  cmd->add_option("--ip-prefix", opt.ip_prefix, "Build an IP-level matrix for this prefix");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string started_at = iso_utc_now();
  CliOptions opt;

  // The config file seeds the defaults before CLI11 parses, so explicit flags
  // override it and absent flags inherit from it.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        apply_config_file(argv[i + 1], opt);
      } else if (arg.rfind("--config=", 0) == 0) {
        apply_config_file(arg.substr(9), opt);
      }
    }
  } catch (const rttlens::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{
      "rttlens: low-rank + sparse decomposition of RTT matrices,\n"
      "delay-space rank analysis, and inflated-path detection.\n"
      "Exit codes: 0 success, 2 input error, 3 solver non-convergence."};
  app.require_subcommand(1);

  auto* dec = app.add_subcommand("decompose", "Split a matrix into expected (L) and inflation (S)");
  add_shared_flags(dec, opt);
  add_input_flags(dec, opt);
  dec->add_flag("--per-file-scale", opt.per_file_scale,
                "Scale each heatmap to its own maximum instead of the shared one");

  auto* det = app.add_subcommand("detect", "Flag anomalously inflated cells");
  add_shared_flags(det, opt);
  add_input_flags(det, opt);

  auto* rank = app.add_subcommand("rank-analysis", "Rank vs endpoint-feature report");
  add_shared_flags(rank, opt);
  add_input_flags(rank, opt);
  rank->add_option("--submatrices", opt.submatrices, "Random submatrices to sample");
  rank->add_option("--min-dim", opt.min_dim, "Smallest sampled axis length");

  auto* synth = app.add_subcommand("synth", "Generate a planted fixture (and optionally bench)");
  add_shared_flags(synth, opt);
  synth->add_option("--spec", opt.spec_path, "Synthetic spec JSON")->required();
  synth->add_flag("--bench", opt.bench, "Score rpca/two_sigma/pca across seeds");
  synth->add_option("--bench-seeds", opt.bench_seeds, "Seeds in the benchmark sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (dec->parsed()) return cmd_decompose(opt, started_at);
    if (det->parsed()) return cmd_detect(opt, started_at);
    if (rank->parsed()) return cmd_rank_analysis(opt, started_at);
    if (synth->parsed()) return cmd_synth(opt, synth->count("--seed") > 0, started_at);
  } catch (const rttlens::TaggedDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& id : e.offending_ids) std::cerr << "  missing tag: " << id << '\n';
    return 2;
  } catch (const rttlens::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
