#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rttlens/latency_matrix.hpp"

namespace rttlens {

struct FeatureCount {
  std::size_t unique_geos = 0;
  std::size_t unique_asns = 0;
  std::size_t unique_geo_asn_pairs = 0;  // >= each individual count
};

/// Distinct cities, ASNs, and (city, asn) pairs.
FeatureCount unique_feature_counts(const std::vector<EndpointTag>& tags);
/// Same, over the labels that carry tags.
FeatureCount unique_feature_counts(const std::vector<AxisLabel>& labels);

/// `count` random submatrices: row count uniform in [min_dim, m], column
/// count uniform in [min_dim, n], then that many distinct indices, tags
/// carried along. Deterministic in the seed.
std::vector<LatencyMatrix> submatrix_sample(const LatencyMatrix& x, int count, int min_dim,
                                            std::uint64_t seed);

struct RankRow {
  std::string matrix_id;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index rank_L = 0;
  FeatureCount row_features;
  FeatureCount col_features;
  std::size_t min_pairs = 0;  // min(row pairs, col pairs)
  int iterations = 0;
  bool converged = false;
};

struct RankReport {
  std::vector<RankRow> rows;  // sorted by matrix_id
  std::vector<std::pair<std::string, std::string>> failures;  // (matrix_id, message)
  // Pearson r between rank_L and the min-over-axes feature counts; NaN when
  // undefined (fewer than two rows or zero variance).
  double pearson_rank_vs_geos = 0;
  double pearson_rank_vs_asns = 0;
  double pearson_rank_vs_pairs = 0;
};

/// Decomposes each matrix and records rank plus endpoint feature counts.
/// Per-matrix failures are listed, not fatal to the batch.
RankReport rank_feature_report(const std::vector<std::pair<std::string, LatencyMatrix>>& matrices,
                               const SolverOptions& opts = {});

/// CSV columns:
/// matrix_id,rows,cols,rank_L,row_geos,row_asns,row_pairs,col_geos,col_asns,col_pairs,min_pairs
void write_rank_report_csv(const RankReport& report, const std::filesystem::path& path);
void write_rank_report_json(const RankReport& report, const std::filesystem::path& path);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rttlens
