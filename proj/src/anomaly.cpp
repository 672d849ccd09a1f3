#include "rttlens/anomaly.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

void FilterConfig::validate() const {
  if (!(tau > 0)) throw InvalidInputError("filter config: tau must be positive");
  if (severity_floor_ms < 0) {
    throw InvalidInputError("filter config: severity floor must be non-negative");
  }
  if (!(cross_continent_abs_ms > 0)) {
    throw InvalidInputError("filter config: absolute threshold must be positive");
  }
  if (!(expected_floor_ms > 0)) {
    throw InvalidInputError("filter config: expected floor must be positive");
  }
}

namespace {

AnomalyCandidate make_candidate(const Decomposition<double>& d, const LatencyMatrix& x,
                                const FilterConfig& cfg, Eigen::Index i, Eigen::Index j) {
  AnomalyCandidate c;
  c.row = i;
  c.col = j;
  c.row_id = x.row_labels[static_cast<std::size_t>(i)].id;
  c.col_id = x.col_labels[static_cast<std::size_t>(j)].id;
  c.measured_ms = x.values(i, j);
  c.expected_ms = d.L(i, j);
  c.inflation_ms = d.S(i, j);
  c.ratio = d.S(i, j) / std::max(d.L(i, j), cfg.expected_floor_ms);
  c.interpolated = x.mask(i, j) == static_cast<std::uint8_t>(MaskState::Interpolated);
  return c;
}

void check_shapes(const Decomposition<double>& d, const LatencyMatrix& x) {
  if (d.L.rows() != x.rows() || d.L.cols() != x.cols()) {
    throw InvalidInputError("anomaly filter: decomposition and matrix dimensions disagree");
  }
}

}  // namespace

std::vector<AnomalyCandidate> ratio_filter(const Decomposition<double>& d, const LatencyMatrix& x,
                                           const FilterConfig& cfg) {
  cfg.validate();
  check_shapes(d, x);
  std::vector<AnomalyCandidate> out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!is_present(x.mask(i, j))) continue;
      const double s = d.S(i, j);
      if (s <= 0) continue;
      if (s / std::max(d.L(i, j), cfg.expected_floor_ms) <= cfg.tau) continue;
      auto c = make_candidate(d, x, cfg, i, j);
      c.by_ratio = true;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<AnomalyCandidate> absolute_filter(const Decomposition<double>& d,
                                              const LatencyMatrix& x, const FilterConfig& cfg,
                                              AbsoluteScope scope) {
  cfg.validate();
  check_shapes(d, x);
  if (scope == AbsoluteScope::off) return {};

  if (scope == AbsoluteScope::cross_continent) {
    std::vector<std::string> untagged;
    for (const auto& l : x.row_labels) {
      if (!l.tag) untagged.push_back(l.id);
    }
    for (const auto& l : x.col_labels) {
      if (!l.tag) untagged.push_back(l.id);
    }
    if (!untagged.empty()) {
      throw TaggedDataError("absolute filter: cross-continent scope needs continent tags",
                            untagged);
    }
  }

  std::vector<AnomalyCandidate> out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!is_present(x.mask(i, j))) continue;
      if (d.S(i, j) <= cfg.cross_continent_abs_ms) continue;
      if (scope == AbsoluteScope::cross_continent) {
        const auto& rt = *x.row_labels[static_cast<std::size_t>(i)].tag;
        const auto& ct = *x.col_labels[static_cast<std::size_t>(j)].tag;
        if (rt.continent == ct.continent) continue;
      }
      auto c = make_candidate(d, x, cfg, i, j);
      c.by_absolute = true;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<AnomalyCandidate> rank_candidates(std::vector<AnomalyCandidate> candidates,
                                              const FilterConfig& cfg) {
  cfg.validate();
  std::sort(candidates.begin(), candidates.end(),
            [](const AnomalyCandidate& a, const AnomalyCandidate& b) {
              if (a.inflation_ms != b.inflation_ms) return a.inflation_ms > b.inflation_ms;
              if (a.ratio != b.ratio) return a.ratio > b.ratio;
              if (a.row_id != b.row_id) return a.row_id < b.row_id;
              return a.col_id < b.col_id;
            });
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    candidates[k].severity_rank = static_cast<int>(k + 1);
    candidates[k].below_floor = candidates[k].inflation_ms < cfg.severity_floor_ms;
  }
  return candidates;
}

AbsoluteScope resolve_absolute_scope(const LatencyMatrix& x, std::optional<AbsoluteScope> requested,
                                     std::vector<std::string>& warnings) {
  if (requested) return *requested;
  if (x.fully_tagged()) return AbsoluteScope::cross_continent;
  warnings.push_back("absolute filter skipped: matrix is not fully tagged with continents");
  return AbsoluteScope::off;
}

std::vector<AnomalyCandidate> filter_candidates(const Decomposition<double>& d,
                                                const LatencyMatrix& x, const FilterConfig& cfg,
                                                AbsoluteScope scope) {
  auto merged = ratio_filter(d, x, cfg);
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::size_t> index_of;
  for (std::size_t k = 0; k < merged.size(); ++k) {
    index_of.emplace(std::make_pair(merged[k].row, merged[k].col), k);
  }
  for (auto& c : absolute_filter(d, x, cfg, scope)) {
    const auto it = index_of.find({c.row, c.col});
    if (it != index_of.end()) {
      merged[it->second].by_absolute = true;
    } else {
      merged.push_back(std::move(c));
    }
  }
  return rank_candidates(std::move(merged), cfg);
}

DetectionResult detect(const LatencyMatrix& x, const SolverOptions& sopts, const FilterConfig& cfg,
                       std::optional<AbsoluteScope> absolute) {
  cfg.validate();
  DetectionResult result;
  result.decomposition = decompose(x, sopts);
  if (!result.decomposition.converged) {
    result.warnings.push_back("solver did not converge within the iteration budget");
  }
  const AbsoluteScope scope = resolve_absolute_scope(x, absolute, result.warnings);
  result.candidates = filter_candidates(result.decomposition, x, cfg, scope);
  return result;
}

void write_candidates_csv(const std::vector<AnomalyCandidate>& candidates,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "severity_rank,row_id,col_id,measured_ms,expected_ms,inflation_ms,ratio,by_ratio,"
         "by_absolute,interpolated,below_floor\n";
  for (const auto& c : candidates) {
    out << c.severity_rank << ',' << c.row_id << ',' << c.col_id << ','
        << csv::format_double(c.measured_ms) << ',' << csv::format_double(c.expected_ms) << ','
        << csv::format_double(c.inflation_ms) << ',' << csv::format_double(c.ratio) << ','
        << (c.by_ratio ? "true" : "false") << ',' << (c.by_absolute ? "true" : "false") << ','
        << (c.interpolated ? "true" : "false") << ',' << (c.below_floor ? "true" : "false")
        << '\n';
  }
}

void write_candidates_json(const std::vector<AnomalyCandidate>& candidates,
                           const std::string& matrix_id, const FilterConfig& cfg,
                           const std::filesystem::path& path) {
  nlohmann::json j;
  j["matrix_id"] = matrix_id;
  j["config"] = {{"tau", cfg.tau},
                 {"severity_floor_ms", cfg.severity_floor_ms},
                 {"cross_continent_abs_ms", cfg.cross_continent_abs_ms},
                 {"expected_floor_ms", cfg.expected_floor_ms}};
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : candidates) {
    j["candidates"].push_back({{"severity_rank", c.severity_rank},
                               {"row", c.row},
                               {"col", c.col},
                               {"row_id", c.row_id},
                               {"col_id", c.col_id},
                               {"measured_ms", c.measured_ms},
                               {"expected_ms", c.expected_ms},
                               {"inflation_ms", c.inflation_ms},
                               {"ratio", c.ratio},
                               {"by_ratio", c.by_ratio},
                               {"by_absolute", c.by_absolute},
                               {"interpolated", c.interpolated},
                               {"below_floor", c.below_floor}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace rttlens
