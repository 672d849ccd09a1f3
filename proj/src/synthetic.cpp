#include "rttlens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

namespace {

void validate_clusters(const std::vector<ClusterSpec>& clusters, int total, const char* axis) {
  if (clusters.empty()) {
    throw InvalidSpecError(std::string("synthetic spec: no ") + axis + " clusters");
  }
  int sum = 0;
  for (const auto& c : clusters) {
    if (c.members < 1) {
      throw InvalidSpecError(std::string("synthetic spec: ") + axis +
                             " cluster with non-positive member count");
    }
    if (c.asn == 0) {
      throw InvalidSpecError(std::string("synthetic spec: ") + axis + " cluster with ASN 0");
    }
    if (c.city.empty()) {
      throw InvalidSpecError(std::string("synthetic spec: ") + axis + " cluster without a city");
    }
    const auto cont = continent_of_country(c.country);
    if (!cont) {
      throw InvalidSpecError(std::string("synthetic spec: ") + axis +
                             " cluster with unknown country '" + c.country + "'");
    }
    if (*cont != c.continent) {
      throw InvalidSpecError(std::string("synthetic spec: ") + axis + " cluster country '" +
                             c.country + "' lies on another continent");
    }
    sum += c.members;
  }
  if (sum != total) {
    throw InvalidSpecError(std::string("synthetic spec: ") + axis +
                           " cluster members do not sum to the axis size");
  }
}

// Cluster index per row/column, block-contiguous in declaration order.
std::vector<int> expand_clusters(const std::vector<ClusterSpec>& clusters) {
  std::vector<int> assignment;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    assignment.insert(assignment.end(), static_cast<std::size_t>(clusters[k].members),
                      static_cast<int>(k));
  }
  return assignment;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_sources < 1 || n_prefixes < 1) {
    throw InvalidSpecError("synthetic spec: matrix dimensions must be positive");
  }
  validate_clusters(row_clusters, n_sources, "row");
  validate_clusters(col_clusters, n_prefixes, "column");
  if (cluster_means.rows() != static_cast<Eigen::Index>(row_clusters.size()) ||
      cluster_means.cols() != static_cast<Eigen::Index>(col_clusters.size())) {
    throw InvalidSpecError("synthetic spec: cluster_means shape disagrees with the cluster lists");
  }
  if (!cluster_means.allFinite() || (cluster_means.array() <= 0.0).any()) {
    throw InvalidSpecError("synthetic spec: cluster means must be finite and positive");
  }
  if (!(jitter_ms >= 0) || !std::isfinite(jitter_ms)) {
    throw InvalidSpecError("synthetic spec: jitter must be finite and non-negative");
  }
  if (jitter_ms >= cluster_means.minCoeff()) {
    throw InvalidSpecError("synthetic spec: jitter reaches a cluster mean; RTTs could go negative");
  }
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (const auto& a : anomalies) {
    if (a.row < 0 || a.row >= n_sources || a.col < 0 || a.col >= n_prefixes) {
      throw InvalidSpecError("synthetic spec: anomaly cell outside the matrix");
    }
    if (!(a.inflation_ms > 0) || !std::isfinite(a.inflation_ms)) {
      throw InvalidSpecError("synthetic spec: anomaly inflation must be finite and positive");
    }
    if (!seen.emplace(a.row, a.col).second) {
      throw InvalidSpecError("synthetic spec: duplicate anomaly cell");
    }
  }
  if (!(missing_fraction >= 0) || !(missing_fraction < 1)) {
    throw InvalidSpecError("synthetic spec: missing fraction must lie in [0, 1)");
  }
}

Eigen::MatrixXd additive_cluster_means(int row_clusters, int col_clusters, double lo, double hi,
                                       double interaction_ms, Rng& rng) {
  if (row_clusters < 1 || col_clusters < 1) {
    throw InvalidInputError("additive_cluster_means: cluster counts must be positive");
  }
  if (!(lo > 0) || !(hi >= lo)) {
    throw InvalidInputError("additive_cluster_means: need 0 < lo <= hi");
  }
  if (interaction_ms < 0 || interaction_ms >= lo) {
    throw InvalidInputError("additive_cluster_means: interaction must lie in [0, lo)");
  }
  Eigen::VectorXd d(row_clusters), a(col_clusters);
  for (Eigen::Index r = 0; r < row_clusters; ++r) d(r) = rng.next_uniform(lo, hi);
  for (Eigen::Index c = 0; c < col_clusters; ++c) a(c) = rng.next_uniform(lo, hi);
  Eigen::MatrixXd means(row_clusters, col_clusters);
  for (Eigen::Index r = 0; r < row_clusters; ++r) {
    for (Eigen::Index c = 0; c < col_clusters; ++c) {
      const double eps =
          interaction_ms > 0 ? rng.next_uniform(-interaction_ms, interaction_ms) : 0.0;
      means(r, c) = d(r) + a(c) + eps;
    }
  }
  return means;
}

std::pair<LatencyMatrix, GroundTruth> generate(const SyntheticSpec& spec) {
  spec.validate();
  const Eigen::Index m = spec.n_sources;
  const Eigen::Index n = spec.n_prefixes;
  const auto row_of = expand_clusters(spec.row_clusters);
  const auto col_of = expand_clusters(spec.col_clusters);

  Rng rng(spec.seed);
  GroundTruth truth;
  truth.L0.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      truth.L0(i, j) = spec.cluster_means(row_of[static_cast<std::size_t>(i)],
                                          col_of[static_cast<std::size_t>(j)]);
    }
  }
  if (spec.jitter_ms > 0) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        truth.L0(i, j) += rng.next_uniform(-spec.jitter_ms, spec.jitter_ms);
      }
    }
  }

  truth.S0 = Eigen::MatrixXd::Zero(m, n);
  for (const auto& a : spec.anomalies) {
    truth.S0(a.row, a.col) = a.inflation_ms;
    truth.anomaly_cells.emplace(a.row, a.col);
  }

  truth.mask0 = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, n, true);
  const auto requested =
      static_cast<std::size_t>(std::llround(spec.missing_fraction * static_cast<double>(m * n)));
  if (requested > 0) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> eligible;
    eligible.reserve(static_cast<std::size_t>(m * n));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!spec.missing_on_anomalies && truth.anomaly_cells.count({i, j})) continue;
        eligible.emplace_back(i, j);
      }
    }
    if (requested > eligible.size()) {
      throw InvalidSpecError("synthetic spec: missing fraction exceeds the maskable cells");
    }
    for (const auto k : rng.sample_indices(eligible.size(), requested)) {
      truth.mask0(eligible[k].first, eligible[k].second) = false;
    }
  }

  LatencyMatrix x;
  x.level = MatrixLevel::prefix;
  x.values.resize(m, n);
  x.mask.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (truth.mask0(i, j)) {
        x.values(i, j) = truth.L0(i, j) + truth.S0(i, j);
        x.mask(i, j) = static_cast<std::uint8_t>(MaskState::Observed);
      } else {
        x.values(i, j) = 0.0;
        x.mask(i, j) = static_cast<std::uint8_t>(MaskState::Missing);
      }
    }
  }

  char id[32];
  x.row_labels.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = spec.row_clusters[static_cast<std::size_t>(row_of[static_cast<std::size_t>(i)])];
    std::snprintf(id, sizeof id, "s%04lld", static_cast<long long>(i));
    x.row_labels.push_back(AxisLabel{id, EndpointTag{c.asn, c.city, c.country, c.continent}});
  }
  x.col_labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& c = spec.col_clusters[static_cast<std::size_t>(col_of[static_cast<std::size_t>(j)])];
    std::snprintf(id, sizeof id, "10.%lld.%lld.0/24", static_cast<long long>(j / 256),
                  static_cast<long long>(j % 256));
    x.col_labels.push_back(AxisLabel{id, EndpointTag{c.asn, c.city, c.country, c.continent}});
  }
  x.validate();
  return {std::move(x), std::move(truth)};
}

DetectionScore score_detection(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& flagged,
                               const GroundTruth& truth, double min_inflation_ms) {
  std::set<std::pair<Eigen::Index, Eigen::Index>> qualifying;
  for (const auto& cell : truth.anomaly_cells) {
    if (truth.S0(cell.first, cell.second) >= min_inflation_ms) qualifying.insert(cell);
  }
  const std::set<std::pair<Eigen::Index, Eigen::Index>> flagged_set(flagged.begin(), flagged.end());

  DetectionScore score;
  for (const auto& cell : flagged_set) {
    if (qualifying.count(cell)) {
      ++score.tp;
    } else if (!truth.anomaly_cells.count(cell)) {
      // Flagging a planted-but-subthreshold cell is neither a hit nor a miss.
      ++score.fp;
    }
  }
  score.fn = static_cast<long>(qualifying.size()) - score.tp;
  if (score.tp + score.fp > 0) {
    score.precision = static_cast<double>(score.tp) / static_cast<double>(score.tp + score.fp);
  }
  if (score.tp + score.fn > 0) {
    score.recall = static_cast<double>(score.tp) / static_cast<double>(score.tp + score.fn);
  }
  return score;
}

DetectionScore score_detection(const std::vector<AnomalyCandidate>& candidates,
                               const GroundTruth& truth, double min_inflation_ms,
                               bool include_below_floor) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> flagged;
  for (const auto& c : candidates) {
    if (c.below_floor && !include_below_floor) continue;
    flagged.emplace_back(c.row, c.col);
  }
  return score_detection(flagged, truth, min_inflation_ms);
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> baseline_two_sigma(const LatencyMatrix& x,
                                                                      SigmaScope scope) {
  x.validate();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> flagged;
  const Eigen::Index outer = scope == SigmaScope::column ? x.cols() : x.rows();
  const Eigen::Index inner = scope == SigmaScope::column ? x.rows() : x.cols();
  for (Eigen::Index a = 0; a < outer; ++a) {
    double sum = 0, sumsq = 0;
    Eigen::Index count = 0;
    for (Eigen::Index b = 0; b < inner; ++b) {
      const Eigen::Index i = scope == SigmaScope::column ? b : a;
      const Eigen::Index j = scope == SigmaScope::column ? a : b;
      if (!is_present(x.mask(i, j))) continue;
      sum += x.values(i, j);
      sumsq += x.values(i, j) * x.values(i, j);
      ++count;
    }
    if (count < 3) continue;
    for (Eigen::Index b = 0; b < inner; ++b) {
      const Eigen::Index i = scope == SigmaScope::column ? b : a;
      const Eigen::Index j = scope == SigmaScope::column ? a : b;
      if (!is_present(x.mask(i, j))) continue;
      const double v = x.values(i, j);
      // Leave-one-out keeps the tested value from inflating its own baseline.
      const double rest = static_cast<double>(count - 1);
      const double mean = (sum - v) / rest;
      const double var = std::max((sumsq - v * v) / rest - mean * mean, 0.0);
      if (v > mean + 2.0 * std::sqrt(var)) flagged.emplace_back(i, j);
    }
  }
  std::sort(flagged.begin(), flagged.end());
  return flagged;
}

Eigen::Index spectral_energy_rank(const Eigen::MatrixXd& m, double fraction) {
  if (!(fraction > 0) || fraction > 1) {
    throw InvalidInputError("spectral_energy_rank: fraction must lie in (0, 1]");
  }
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Eigen::VectorXd sigma = detail::singular_values<double>(m, "spectral_energy_rank");
  const double total = sigma.squaredNorm();
  if (total <= 0) return 0;
  double cum = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    cum += sigma(k) * sigma(k);
    if (cum >= fraction * total) return k + 1;
  }
  return sigma.size();
}

DetectionResult baseline_pca(const LatencyMatrix& x, Eigen::Index rank_k, const FilterConfig& cfg,
                             std::optional<AbsoluteScope> absolute) {
  x.validate();
  cfg.validate();
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  if (rank_k < 1 || rank_k >= std::min(m, n)) {
    throw InvalidInputError("baseline_pca: rank must lie in [1, min(m, n))");
  }

  // Best rank-k approximation as a projection onto the top singular subspace
  // of the shorter side; robust to the repeated rows cluster matrices carry.
  Eigen::MatrixXd l(m, n);
  const bool tall = m >= n;
  const Eigen::MatrixXd gram = tall ? Eigen::MatrixXd(x.values.transpose() * x.values)
                                    : Eigen::MatrixXd(x.values * x.values.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw SvdFailureError("baseline_pca: symmetric eigensolve did not converge");
  }
  const Eigen::Index dim = gram.rows();
  Eigen::MatrixXd basis(dim, rank_k);  // top eigenvectors, descending eigenvalue
  for (Eigen::Index i = 0; i < rank_k; ++i) basis.col(i) = eig.eigenvectors().col(dim - 1 - i);
  if (tall) {
    l = (x.values * basis) * basis.transpose();
  } else {
    l = basis * (basis.transpose() * x.values);
  }

  DetectionResult result;
  result.decomposition.L = std::move(l);
  result.decomposition.S = x.values - result.decomposition.L;
  result.decomposition.rank_L = rank_k;
  result.decomposition.converged = true;

  const AbsoluteScope scope = resolve_absolute_scope(x, absolute, result.warnings);
  result.candidates = filter_candidates(result.decomposition, x, cfg, scope);
  return result;
}

namespace {

Continent continent_from_json(const nlohmann::json& j, const std::string& what) {
  const auto code = j.get<std::string>();
  const auto c = parse_continent(code);
  if (!c) throw InvalidSpecError("synthetic spec: unknown continent '" + code + "' in " + what);
  return *c;
}

std::vector<ClusterSpec> clusters_from_json(const nlohmann::json& arr, const std::string& what) {
  std::vector<ClusterSpec> out;
  for (const auto& item : arr) {
    ClusterSpec c;
    c.asn = item.at("asn").get<std::uint32_t>();
    c.city = item.at("city").get<std::string>();
    c.country = item.at("country").get<std::string>();
    c.continent = continent_from_json(item.at("continent"), what);
    c.members = item.at("members").get<int>();
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json clusters_to_json(const std::vector<ClusterSpec>& clusters) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : clusters) {
    arr.push_back({{"asn", c.asn},
                   {"city", c.city},
                   {"country", c.country},
                   {"continent", std::string(to_string(c.continent))},
                   {"members", c.members}});
  }
  return arr;
}

}  // namespace

SyntheticSpec read_spec_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }

  SyntheticSpec spec;
  try {
    spec.n_sources = j.at("n_sources").get<int>();
    spec.n_prefixes = j.at("n_prefixes").get<int>();
    spec.row_clusters = clusters_from_json(j.at("row_clusters"), "row_clusters");
    spec.col_clusters = clusters_from_json(j.at("col_clusters"), "col_clusters");
    if (j.contains("jitter_ms")) spec.jitter_ms = j["jitter_ms"].get<double>();
    if (j.contains("missing_fraction")) {
      spec.missing_fraction = j["missing_fraction"].get<double>();
    }
    if (j.contains("missing_on_anomalies")) {
      spec.missing_on_anomalies = j["missing_on_anomalies"].get<bool>();
    }
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("anomalies")) {
      for (const auto& item : j["anomalies"]) {
        spec.anomalies.push_back(PlantedAnomaly{item.at("row").get<Eigen::Index>(),
                                                item.at("col").get<Eigen::Index>(),
                                                item.at("inflation_ms").get<double>()});
      }
    }

    const bool has_means = j.contains("cluster_means");
    const bool has_model = j.contains("mean_model");
    if (has_means == has_model) {
      throw FormatError(path.string() + ": give exactly one of cluster_means and mean_model");
    }
    const auto rows = static_cast<Eigen::Index>(spec.row_clusters.size());
    const auto cols = static_cast<Eigen::Index>(spec.col_clusters.size());
    if (has_means) {
      const auto& grid = j["cluster_means"];
      if (static_cast<Eigen::Index>(grid.size()) != rows) {
        throw FormatError(path.string() + ": cluster_means row count disagrees with row_clusters");
      }
      spec.cluster_means.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = grid[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols) {
          throw FormatError(path.string() +
                            ": cluster_means column count disagrees with col_clusters");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
          spec.cluster_means(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
      }
    } else {
      // Additive model D_r + A_c + eps with separate row and column ranges,
      // expanded here so generate() always sees an explicit mean grid.
      const auto& model = j["mean_model"];
      const double row_lo = model.at("row_lo").get<double>();
      const double row_hi = model.at("row_hi").get<double>();
      const double col_lo = model.at("col_lo").get<double>();
      const double col_hi = model.at("col_hi").get<double>();
      const double interaction = model.at("interaction_ms").get<double>();
      if (!(row_lo > 0) || !(row_hi >= row_lo) || !(col_lo > 0) || !(col_hi >= col_lo) ||
          interaction < 0) {
        throw FormatError(path.string() + ": invalid mean_model ranges");
      }
      Rng rng(spec.seed);
      Eigen::VectorXd d(rows), a(cols);
      for (Eigen::Index r = 0; r < rows; ++r) d(r) = rng.next_uniform(row_lo, row_hi);
      for (Eigen::Index c = 0; c < cols; ++c) a(c) = rng.next_uniform(col_lo, col_hi);
      spec.cluster_means.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          const double eps = interaction > 0 ? rng.next_uniform(-interaction, interaction) : 0.0;
          spec.cluster_means(r, c) = d(r) + a(c) + eps;
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  spec.validate();
  return spec;
}

void write_spec_json(const SyntheticSpec& spec, const std::filesystem::path& path) {
  spec.validate();
  nlohmann::json j;
  j["n_sources"] = spec.n_sources;
  j["n_prefixes"] = spec.n_prefixes;
  j["row_clusters"] = clusters_to_json(spec.row_clusters);
  j["col_clusters"] = clusters_to_json(spec.col_clusters);
  j["cluster_means"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < spec.cluster_means.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < spec.cluster_means.cols(); ++c) {
      row.push_back(spec.cluster_means(r, c));
    }
    j["cluster_means"].push_back(std::move(row));
  }
  j["jitter_ms"] = spec.jitter_ms;
  j["anomalies"] = nlohmann::json::array();
  for (const auto& a : spec.anomalies) {
    j["anomalies"].push_back({{"row", a.row}, {"col", a.col}, {"inflation_ms", a.inflation_ms}});
  }
  j["missing_fraction"] = spec.missing_fraction;
  j["missing_on_anomalies"] = spec.missing_on_anomalies;
  j["seed"] = spec.seed;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_scores_csv(const std::vector<ScoreRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "seed,detector,tp,fp,fn,precision,recall\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << r.detector << ',' << r.score.tp << ',' << r.score.fp << ','
        << r.score.fn << ',' << csv::format_double(r.score.precision) << ','
        << csv::format_double(r.score.recall) << '\n';
  }
}

}  // namespace rttlens
