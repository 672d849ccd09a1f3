#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rttlens/latency_matrix.hpp"

namespace rttlens {

struct FilterConfig {
  double tau = 1.0;                     // ratio threshold
  double severity_floor_ms = 10.0;      // below this, candidates are labeled, not dropped
  double cross_continent_abs_ms = 30.0; // absolute-filter threshold
  double expected_floor_ms = 0.1;       // denominator clamp for the ratio

  void validate() const;  // throws invalid-input on violation
};

struct AnomalyCandidate {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  std::string row_id;
  std::string col_id;
  double measured_ms = 0;   // X(i,j) exactly as ingested
  double expected_ms = 0;   // L(i,j)
  double inflation_ms = 0;  // S(i,j)
  double ratio = 0;         // S / max(L, expected_floor_ms)
  bool by_ratio = false;
  bool by_absolute = false;
  bool interpolated = false;
  bool below_floor = false;
  int severity_rank = 0;  // 1-based after rank_candidates
};

enum class AbsoluteScope { off, cross_continent, all_cells };

/// Cells with S > 0 and S / max(L, expected_floor_ms) > tau. Missing cells
/// are never flagged; negative S is deflation, not inflation.
std::vector<AnomalyCandidate> ratio_filter(const Decomposition<double>& d, const LatencyMatrix& x,
                                           const FilterConfig& cfg = {});

/// Cells with S > cross_continent_abs_ms whose row and column continents
/// differ (or every cell under all_cells scope). Cross-continent scope
/// requires continent tags on both axes; missing ones raise a tagged-data
/// error listing the offending ids.
std::vector<AnomalyCandidate> absolute_filter(const Decomposition<double>& d,
                                              const LatencyMatrix& x, const FilterConfig& cfg = {},
                                              AbsoluteScope scope = AbsoluteScope::cross_continent);

/// Severity order: inflation_ms descending, ratio descending, then
/// (row_id, col_id) ascending. Assigns severity_rank 1..k and labels
/// below-floor candidates.
std::vector<AnomalyCandidate> rank_candidates(std::vector<AnomalyCandidate> candidates,
                                              const FilterConfig& cfg = {});

struct DetectionResult {
  std::vector<AnomalyCandidate> candidates;  // ranked
  Decomposition<double> decomposition;
  std::vector<std::string> warnings;
};

/// Without an explicit request the absolute filter runs cross-continent when
/// every label is tagged and is off (with a warning appended) otherwise.
AbsoluteScope resolve_absolute_scope(const LatencyMatrix& x, std::optional<AbsoluteScope> requested,
                                     std::vector<std::string>& warnings);

/// Ratio filter united with the absolute filter, duplicates merged into one
/// candidate carrying both flags, then ranked.
std::vector<AnomalyCandidate> filter_candidates(const Decomposition<double>& d,
                                                const LatencyMatrix& x, const FilterConfig& cfg,
                                                AbsoluteScope scope);

/// decompose + ratio filter + absolute filter, deduplicated with merged
/// filter flags, then ranked. Without an explicit scope the absolute filter
/// runs cross-continent when every label is tagged and is skipped (with a
/// warning) otherwise.
DetectionResult detect(const LatencyMatrix& x, const SolverOptions& sopts = {},
                       const FilterConfig& cfg = {},
                       std::optional<AbsoluteScope> absolute = std::nullopt);

/// Flat export: one row per candidate, columns mirroring AnomalyCandidate.
void write_candidates_csv(const std::vector<AnomalyCandidate>& candidates,
                          const std::filesystem::path& path);
/// JSON report: candidate array plus matrix id and config echo.
void write_candidates_json(const std::vector<AnomalyCandidate>& candidates,
                           const std::string& matrix_id, const FilterConfig& cfg,
                           const std::filesystem::path& path);

}  // namespace rttlens
