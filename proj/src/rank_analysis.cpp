#include "rttlens/rank_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"
#include "rttlens/rng.hpp"

namespace rttlens {

FeatureCount unique_feature_counts(const std::vector<EndpointTag>& tags) {
  std::set<std::string> geos;
  std::set<std::uint32_t> asns;
  std::set<std::pair<std::string, std::uint32_t>> pairs;
  for (const auto& t : tags) {
    geos.insert(t.city);
    asns.insert(t.asn);
    pairs.emplace(t.city, t.asn);
  }
  return FeatureCount{geos.size(), asns.size(), pairs.size()};
}

FeatureCount unique_feature_counts(const std::vector<AxisLabel>& labels) {
  std::vector<EndpointTag> tags;
  tags.reserve(labels.size());
  for (const auto& l : labels) {
    if (l.tag) tags.push_back(*l.tag);
  }
  return unique_feature_counts(tags);
}

std::vector<LatencyMatrix> submatrix_sample(const LatencyMatrix& x, int count, int min_dim,
                                            std::uint64_t seed) {
  if (count < 0) throw InvalidInputError("submatrix_sample: negative count");
  if (min_dim < 1) throw InvalidInputError("submatrix_sample: min_dim must be positive");
  const auto m = static_cast<std::uint64_t>(x.rows());
  const auto n = static_cast<std::uint64_t>(x.cols());
  if (m < static_cast<std::uint64_t>(min_dim) || n < static_cast<std::uint64_t>(min_dim)) {
    throw InvalidInputError("submatrix_sample: matrix smaller than min_dim on an axis");
  }

  Rng rng(seed);
  std::vector<LatencyMatrix> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const auto r = static_cast<std::uint64_t>(min_dim) +
                   rng.next_below(m - static_cast<std::uint64_t>(min_dim) + 1);
    const auto c = static_cast<std::uint64_t>(min_dim) +
                   rng.next_below(n - static_cast<std::uint64_t>(min_dim) + 1);
    const auto rows = rng.sample_indices(m, r);
    const auto cols = rng.sample_indices(n, c);

    LatencyMatrix sub;
    sub.level = x.level;
    sub.values.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    sub.mask.resize(sub.values.rows(), sub.values.cols());
    for (std::size_t jj = 0; jj < cols.size(); ++jj) {
      for (std::size_t ii = 0; ii < rows.size(); ++ii) {
        const auto i = static_cast<Eigen::Index>(rows[ii]);
        const auto j = static_cast<Eigen::Index>(cols[jj]);
        sub.values(static_cast<Eigen::Index>(ii), static_cast<Eigen::Index>(jj)) = x.values(i, j);
        sub.mask(static_cast<Eigen::Index>(ii), static_cast<Eigen::Index>(jj)) = x.mask(i, j);
      }
    }
    for (const auto i : rows) sub.row_labels.push_back(x.row_labels[static_cast<std::size_t>(i)]);
    for (const auto j : cols) sub.col_labels.push_back(x.col_labels[static_cast<std::size_t>(j)]);
    out.push_back(std::move(sub));
  }
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (a.size() != b.size() || a.size() < 2) return nan;
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return nan;
  return sab / std::sqrt(saa * sbb);
}

RankReport rank_feature_report(const std::vector<std::pair<std::string, LatencyMatrix>>& matrices,
                               const SolverOptions& opts) {
  RankReport report;
  for (const auto& [id, x] : matrices) {
    try {
      if (x.missing_count() > 0) {
        throw InvalidInputError("matrix has missing cells; interpolate first");
      }
      const auto d = decompose(x, opts);
      RankRow row;
      row.matrix_id = id;
      row.rows = x.rows();
      row.cols = x.cols();
      row.rank_L = d.rank_L;
      row.row_features = unique_feature_counts(x.row_labels);
      row.col_features = unique_feature_counts(x.col_labels);
      row.min_pairs =
          std::min(row.row_features.unique_geo_asn_pairs, row.col_features.unique_geo_asn_pairs);
      row.iterations = d.iterations;
      row.converged = d.converged;
      report.rows.push_back(std::move(row));
    } catch (const Error& e) {
      report.failures.emplace_back(id, e.what());
    }
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const RankRow& a, const RankRow& b) { return a.matrix_id < b.matrix_id; });
  std::sort(report.failures.begin(), report.failures.end());

  std::vector<double> rank, geos, asns, pairs;
  for (const auto& r : report.rows) {
    rank.push_back(static_cast<double>(r.rank_L));
    geos.push_back(static_cast<double>(
        std::min(r.row_features.unique_geos, r.col_features.unique_geos)));
    asns.push_back(static_cast<double>(
        std::min(r.row_features.unique_asns, r.col_features.unique_asns)));
    pairs.push_back(static_cast<double>(r.min_pairs));
  }
  report.pearson_rank_vs_geos = pearson(rank, geos);
  report.pearson_rank_vs_asns = pearson(rank, asns);
  report.pearson_rank_vs_pairs = pearson(rank, pairs);
  return report;
}

void write_rank_report_csv(const RankReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "matrix_id,rows,cols,rank_L,row_geos,row_asns,row_pairs,col_geos,col_asns,col_pairs,"
         "min_pairs\n";
  for (const auto& r : report.rows) {
    out << r.matrix_id << ',' << r.rows << ',' << r.cols << ',' << r.rank_L << ','
        << r.row_features.unique_geos << ',' << r.row_features.unique_asns << ','
        << r.row_features.unique_geo_asn_pairs << ',' << r.col_features.unique_geos << ','
        << r.col_features.unique_asns << ',' << r.col_features.unique_geo_asn_pairs << ','
        << r.min_pairs << '\n';
  }
}

void write_rank_report_json(const RankReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"matrix_id", r.matrix_id},
                         {"rows", r.rows},
                         {"cols", r.cols},
                         {"rank_L", r.rank_L},
                         {"row_geos", r.row_features.unique_geos},
                         {"row_asns", r.row_features.unique_asns},
                         {"row_pairs", r.row_features.unique_geo_asn_pairs},
                         {"col_geos", r.col_features.unique_geos},
                         {"col_asns", r.col_features.unique_asns},
                         {"col_pairs", r.col_features.unique_geo_asn_pairs},
                         {"min_pairs", r.min_pairs},
                         {"iterations", r.iterations},
                         {"converged", r.converged}});
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& [id, msg] : report.failures) {
    j["failures"].push_back({{"matrix_id", id}, {"message", msg}});
  }
  const auto correlation = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  j["pearson_rank_vs_geos"] = correlation(report.pearson_rank_vs_geos);
  j["pearson_rank_vs_asns"] = correlation(report.pearson_rank_vs_asns);
  j["pearson_rank_vs_pairs"] = correlation(report.pearson_rank_vs_pairs);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace rttlens
