#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rttlens/anomaly.hpp"
#include "rttlens/latency_matrix.hpp"
#include "rttlens/rng.hpp"

namespace rttlens {

struct ClusterSpec {
  std::uint32_t asn = 0;
  std::string city;
  std::string country;
  Continent continent = Continent::EU;
  int members = 0;
};

struct PlantedAnomaly {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double inflation_ms = 0;  // > 0
};

/// Ground-truth delay-space model: cluster-structured low-rank base plus
/// planted inflations and a missing mask.
struct SyntheticSpec {
  int n_sources = 0;
  int n_prefixes = 0;
  std::vector<ClusterSpec> row_clusters;  // member counts sum to n_sources
  std::vector<ClusterSpec> col_clusters;  // member counts sum to n_prefixes
  Eigen::MatrixXd cluster_means;          // row_clusters x col_clusters, > 0
  double jitter_ms = 0.5;                 // uniform +-jitter within cluster pairs
  std::vector<PlantedAnomaly> anomalies;
  double missing_fraction = 0.0;  // [0, 1)
  bool missing_on_anomalies = false;  // by default the mask avoids anomaly cells
  std::uint64_t seed = 0;

  void validate() const;  // throws invalid-spec on violation
};

struct GroundTruth {
  Eigen::MatrixXd L0;
  Eigen::MatrixXd S0;
  std::set<std::pair<Eigen::Index, Eigen::Index>> anomaly_cells;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask0;  // true = observed
};

/// X = L0 + S0 with missing_fraction of cells masked. Fully
/// seed-deterministic, including across platforms.
std::pair<LatencyMatrix, GroundTruth> generate(const SyntheticSpec& spec);

/// Cluster-pair means as row effect + column effect + interaction noise:
/// D_r + A_c + eps, D/A uniform in [lo, hi], eps uniform in +-interaction_ms.
/// Mirrors access+transit latency structure and keeps every direction of the
/// mean grid delocalized.
Eigen::MatrixXd additive_cluster_means(int row_clusters, int col_clusters, double lo, double hi,
                                       double interaction_ms, Rng& rng);

struct DetectionScore {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 1.0;  // 0/0 -> 1
  double recall = 1.0;     // 0/0 -> 1
};

/// TP: flagged cells among planted anomalies with S0 >= min_inflation_ms.
/// FP: flagged cells that are no planted anomaly at all.
/// FN: qualifying planted anomalies not flagged.
DetectionScore score_detection(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& flagged,
                               const GroundTruth& truth, double min_inflation_ms);
DetectionScore score_detection(const std::vector<AnomalyCandidate>& candidates,
                               const GroundTruth& truth, double min_inflation_ms,
                               bool include_below_floor = false);

enum class SigmaScope { row, column };

/// Flags cell (i,j) when its value exceeds mean + 2*stddev of the other
/// observed entries in its scope vector (leave-one-out; population stddev).
/// Scope vectors with fewer than 3 observed entries are skipped.
std::vector<std::pair<Eigen::Index, Eigen::Index>> baseline_two_sigma(
    const LatencyMatrix& x, SigmaScope scope = SigmaScope::column);

/// Plain-PCA baseline: L = best rank-k approximation (truncated SVD),
/// S = X - L, then the same ratio/absolute filters as detect().
DetectionResult baseline_pca(const LatencyMatrix& x, Eigen::Index rank_k,
                             const FilterConfig& cfg = {},
                             std::optional<AbsoluteScope> absolute = std::nullopt);

/// Smallest k whose top singular values carry `fraction` of the squared
/// spectral energy.
Eigen::Index spectral_energy_rank(const Eigen::MatrixXd& m, double fraction = 0.9);

/// JSON spec file mirroring SyntheticSpec. `cluster_means` may be replaced by
/// a `mean_model` block {row_lo,row_hi,col_lo,col_hi,interaction_ms} expanded
/// via additive_cluster_means from the spec seed.
SyntheticSpec read_spec_json(const std::filesystem::path& path);
void write_spec_json(const SyntheticSpec& spec, const std::filesystem::path& path);

struct ScoreRow {
  std::uint64_t seed = 0;
  std::string detector;  // rpca | two_sigma | pca
  DetectionScore score;
};

/// CSV columns: seed,detector,tp,fp,fn,precision,recall
void write_scores_csv(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);

}  // namespace rttlens
