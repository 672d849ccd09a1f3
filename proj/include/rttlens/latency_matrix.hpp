#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rttlens/dense.hpp"
#include "rttlens/measurements.hpp"
#include "rttlens/rpca.hpp"
#include "rttlens/tags.hpp"

namespace rttlens {

enum class MatrixLevel { ip, prefix };

struct AxisLabel {
  std::string id;
  std::optional<EndpointTag> tag;
};

/// RTT matrix with a tri-state observation mask. Missing cells hold a 0.0
/// sentinel in `values` and are never read as data.
struct LatencyMatrix {
  Eigen::MatrixXd values;
  MaskMatrix mask;
  std::vector<AxisLabel> row_labels;
  std::vector<AxisLabel> col_labels;
  MatrixLevel level = MatrixLevel::prefix;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  Eigen::Index observed_count() const;
  Eigen::Index interpolated_count() const;
  Eigen::Index missing_count() const;
  bool fully_tagged() const;

  /// Checks dimension agreement, finite values on present cells, and the 0.0
  /// sentinel on missing cells. Throws invalid-input on violation.
  void validate() const;
};

/// IP-level matrix for one prefix: columns are the distinct destination IPs
/// the prefix contains (ascending), rows the sources with at least one
/// observation (by id). Tags attach when directories are given.
LatencyMatrix build_ip_matrix(const std::vector<MeasurementRecord>& collapsed, const Cidr& prefix,
                              const TagDirectory* source_tags = nullptr,
                              const DestinationTags* dest_tags = nullptr);

/// Prefix-level matrix: columns are prefixes with >= min_ips distinct mapped
/// IPs; entry (i,j) is the minimum observed RTT from source i to any IP of
/// prefix j, masked missing when none exists.
LatencyMatrix aggregate_to_prefix(const std::vector<MeasurementRecord>& collapsed,
                                  const PrefixTable& table,
                                  const TagDirectory* source_tags = nullptr,
                                  const DestinationTags* dest_tags = nullptr, int min_ips = 10);

struct InterpolationReport {
  Eigen::Index filled = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> unfilled;
};

/// Fills missing cells with the minimum observed entry in the same
/// (asn, city) row group x (asn, city) column group; filled cells are marked
/// interpolated, observed cells untouched, unfillable cells stay missing and
/// are reported. All row and column tags are required.
std::pair<LatencyMatrix, InterpolationReport> interpolate_missing(const LatencyMatrix& x);

/// Attach tags to untagged labels; ids without a directory entry stay
/// untagged. Returns the ids that remain untagged (rows then cols).
std::vector<std::string> attach_tags(LatencyMatrix& x, const TagDirectory* source_tags,
                                     const DestinationTags* dest_tags);

/// Grid CSV: header row of column ids, leading column of row ids, missing
/// cells empty. A companion `.mask.csv` holds {O,I,M} codes.
void write_matrix_csv(const LatencyMatrix& x, const std::filesystem::path& csv_path);
LatencyMatrix read_matrix_csv(const std::filesystem::path& csv_path);
std::filesystem::path mask_companion_path(const std::filesystem::path& csv_path);

/// Domain-checked decomposition: observed entries must be finite and >= 0
/// (RTTs are physical). Missing cells enter the solver as their 0.0
/// sentinel; interpolate first for honest expectations. The returned
/// residual also covers the masked relative residual over present cells.
Decomposition<double> decompose(const LatencyMatrix& x, const SolverOptions& opts = {});

}  // namespace rttlens
