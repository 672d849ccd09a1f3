#include "rttlens/latency_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

namespace {

Eigen::Index count_state(const MaskMatrix& mask, MaskState state) {
  Eigen::Index n = 0;
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
      if (mask(i, j) == static_cast<std::uint8_t>(state)) ++n;
    }
  }
  return n;
}

}  // namespace

Eigen::Index LatencyMatrix::observed_count() const { return count_state(mask, MaskState::Observed); }
Eigen::Index LatencyMatrix::interpolated_count() const {
  return count_state(mask, MaskState::Interpolated);
}
Eigen::Index LatencyMatrix::missing_count() const { return count_state(mask, MaskState::Missing); }

bool LatencyMatrix::fully_tagged() const {
  const auto tagged = [](const AxisLabel& l) { return l.tag.has_value(); };
  return std::all_of(row_labels.begin(), row_labels.end(), tagged) &&
         std::all_of(col_labels.begin(), col_labels.end(), tagged);
}

void LatencyMatrix::validate() const {
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw InvalidInputError("latency matrix: values and mask dimensions disagree");
  }
  if (static_cast<Eigen::Index>(row_labels.size()) != values.rows() ||
      static_cast<Eigen::Index>(col_labels.size()) != values.cols()) {
    throw InvalidInputError("latency matrix: tag lists and matrix dimensions disagree");
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const auto state = mask(i, j);
      if (state > static_cast<std::uint8_t>(MaskState::Interpolated)) {
        throw InvalidInputError("latency matrix: invalid mask state");
      }
      if (is_present(state)) {
        if (!std::isfinite(values(i, j))) {
          throw InvalidInputError("latency matrix: non-finite value on a present cell");
        }
      } else if (values(i, j) != 0.0) {
        throw InvalidInputError("latency matrix: missing cell without the 0.0 sentinel");
      }
    }
  }
}

std::vector<std::string> attach_tags(LatencyMatrix& x, const TagDirectory* source_tags,
                                     const DestinationTags* dest_tags) {
  std::vector<std::string> untagged;
  for (auto& label : x.row_labels) {
    if (!label.tag && source_tags) label.tag = source_tags->lookup(label.id);
    if (!label.tag) untagged.push_back(label.id);
  }
  for (auto& label : x.col_labels) {
    if (!label.tag && dest_tags) label.tag = dest_tags->lookup(label.id);
    if (!label.tag) untagged.push_back(label.id);
  }
  return untagged;
}

LatencyMatrix build_ip_matrix(const std::vector<MeasurementRecord>& collapsed, const Cidr& prefix,
                              const TagDirectory* source_tags, const DestinationTags* dest_tags) {
  std::set<std::uint32_t> ips;
  std::set<std::string> sources;
  for (const auto& rec : collapsed) {
    if (!prefix.contains(rec.destination_ip)) continue;
    ips.insert(rec.destination_ip.value);
    sources.insert(rec.source_id);
  }
  if (ips.empty()) {
    throw EmptyMatrixError("build_ip_matrix: no destination IPs fall inside " + prefix.to_string());
  }

  std::map<std::uint32_t, Eigen::Index> col_of;
  std::map<std::string, Eigen::Index> row_of;
  for (const auto ip : ips) col_of.emplace(ip, static_cast<Eigen::Index>(col_of.size()));
  for (const auto& s : sources) row_of.emplace(s, static_cast<Eigen::Index>(row_of.size()));

  LatencyMatrix x;
  x.level = MatrixLevel::ip;
  x.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sources.size()),
                                   static_cast<Eigen::Index>(ips.size()));
  x.mask = MaskMatrix::Constant(x.values.rows(), x.values.cols(),
                                static_cast<std::uint8_t>(MaskState::Missing));
  for (const auto& rec : collapsed) {
    if (!prefix.contains(rec.destination_ip)) continue;
    const Eigen::Index i = row_of.at(rec.source_id);
    const Eigen::Index j = col_of.at(rec.destination_ip.value);
    // Collapsed input holds one record per (source, ip); keep the min anyway.
    if (x.mask(i, j) == static_cast<std::uint8_t>(MaskState::Observed)) {
      x.values(i, j) = std::min(x.values(i, j), rec.rtt_ms);
    } else {
      x.values(i, j) = rec.rtt_ms;
      x.mask(i, j) = static_cast<std::uint8_t>(MaskState::Observed);
    }
  }
  x.row_labels.reserve(sources.size());
  for (const auto& [id, _] : row_of) x.row_labels.push_back(AxisLabel{id, std::nullopt});
  x.col_labels.reserve(ips.size());
  for (const auto& [ip, _] : col_of) x.col_labels.push_back(AxisLabel{Ipv4{ip}.to_string(), std::nullopt});
  attach_tags(x, source_tags, dest_tags);
  return x;
}

LatencyMatrix aggregate_to_prefix(const std::vector<MeasurementRecord>& collapsed,
                                  const PrefixTable& table, const TagDirectory* source_tags,
                                  const DestinationTags* dest_tags, int min_ips) {
  if (min_ips < 1) throw InvalidInputError("aggregate_to_prefix: min_ips must be positive");

  // Distinct IPs per prefix decide which columns qualify.
  std::map<Cidr, std::set<std::uint32_t>> mapped_ips;
  for (const auto& rec : collapsed) {
    if (const auto entry = table.longest_match(rec.destination_ip)) {
      mapped_ips[entry->prefix].insert(rec.destination_ip.value);
    }
  }
  std::map<Cidr, Eigen::Index> col_of;
  for (const auto& [cidr, ips] : mapped_ips) {
    if (static_cast<int>(ips.size()) >= min_ips) {
      col_of.emplace(cidr, static_cast<Eigen::Index>(col_of.size()));
    }
  }

  std::set<std::string> sources;
  for (const auto& rec : collapsed) {
    const auto entry = table.longest_match(rec.destination_ip);
    if (entry && col_of.count(entry->prefix)) sources.insert(rec.source_id);
  }
  std::map<std::string, Eigen::Index> row_of;
  for (const auto& s : sources) row_of.emplace(s, static_cast<Eigen::Index>(row_of.size()));

  LatencyMatrix x;
  x.level = MatrixLevel::prefix;
  x.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(row_of.size()),
                                   static_cast<Eigen::Index>(col_of.size()));
  x.mask = MaskMatrix::Constant(x.values.rows(), x.values.cols(),
                                static_cast<std::uint8_t>(MaskState::Missing));
  for (const auto& rec : collapsed) {
    const auto entry = table.longest_match(rec.destination_ip);
    if (!entry) continue;
    const auto col_it = col_of.find(entry->prefix);
    if (col_it == col_of.end()) continue;
    const Eigen::Index i = row_of.at(rec.source_id);
    const Eigen::Index j = col_it->second;
    if (x.mask(i, j) == static_cast<std::uint8_t>(MaskState::Observed)) {
      x.values(i, j) = std::min(x.values(i, j), rec.rtt_ms);
    } else {
      x.values(i, j) = rec.rtt_ms;
      x.mask(i, j) = static_cast<std::uint8_t>(MaskState::Observed);
    }
  }
  x.row_labels.reserve(row_of.size());
  for (const auto& [id, _] : row_of) x.row_labels.push_back(AxisLabel{id, std::nullopt});
  x.col_labels.reserve(col_of.size());
  for (const auto& [cidr, _] : col_of) {
    x.col_labels.push_back(AxisLabel{cidr.to_string(), std::nullopt});
  }
  attach_tags(x, source_tags, dest_tags);
  return x;
}

std::pair<LatencyMatrix, InterpolationReport> interpolate_missing(const LatencyMatrix& x) {
  x.validate();
  std::vector<std::string> untagged;
  for (const auto& l : x.row_labels) {
    if (!l.tag) untagged.push_back(l.id);
  }
  for (const auto& l : x.col_labels) {
    if (!l.tag) untagged.push_back(l.id);
  }
  if (!untagged.empty()) {
    throw TaggedDataError("interpolate_missing: labels without (asn, city) tags", untagged);
  }

  // Group rows and columns by (asn, city).
  std::map<std::pair<std::uint32_t, std::string>, std::vector<Eigen::Index>> row_groups, col_groups;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& t = *x.row_labels[static_cast<std::size_t>(i)].tag;
    row_groups[{t.asn, t.city}].push_back(i);
  }
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto& t = *x.col_labels[static_cast<std::size_t>(j)].tag;
    col_groups[{t.asn, t.city}].push_back(j);
  }

  LatencyMatrix out = x;
  InterpolationReport report;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto& ct = *x.col_labels[static_cast<std::size_t>(j)].tag;
    const auto& donors_j = col_groups.at({ct.asn, ct.city});
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x.mask(i, j) != static_cast<std::uint8_t>(MaskState::Missing)) continue;
      const auto& rt = *x.row_labels[static_cast<std::size_t>(i)].tag;
      const auto& donors_i = row_groups.at({rt.asn, rt.city});
      // Donors are original observed entries only; interpolated cells never cascade.
      double fill = std::numeric_limits<double>::infinity();
      for (const Eigen::Index di : donors_i) {
        for (const Eigen::Index dj : donors_j) {
          if (x.mask(di, dj) == static_cast<std::uint8_t>(MaskState::Observed)) {
            fill = std::min(fill, x.values(di, dj));
          }
        }
      }
      if (std::isfinite(fill)) {
        out.values(i, j) = fill;
        out.mask(i, j) = static_cast<std::uint8_t>(MaskState::Interpolated);
        ++report.filled;
      } else {
        report.unfilled.emplace_back(i, j);
      }
    }
  }
  return {std::move(out), std::move(report)};
}

std::filesystem::path mask_companion_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension();
  p += ".mask.csv";
  return p;
}

void write_matrix_csv(const LatencyMatrix& x, const std::filesystem::path& csv_path) {
  x.validate();
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path.string());
  std::ofstream mask_out(mask_companion_path(csv_path));
  if (!mask_out) throw IoError("cannot write " + mask_companion_path(csv_path).string());

  std::string header;
  for (const auto& label : x.col_labels) {
    header += ',';
    header += label.id;
  }
  out << header << '\n';
  mask_out << header << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out << x.row_labels[static_cast<std::size_t>(i)].id;
    mask_out << x.row_labels[static_cast<std::size_t>(i)].id;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out << ',';
      mask_out << ',';
      switch (static_cast<MaskState>(x.mask(i, j))) {
        case MaskState::Observed:
          out << csv::format_double(x.values(i, j));
          mask_out << 'O';
          break;
        case MaskState::Interpolated:
          out << csv::format_double(x.values(i, j));
          mask_out << 'I';
          break;
        case MaskState::Missing:
          mask_out << 'M';
          break;
      }
    }
    out << '\n';
    mask_out << '\n';
  }
}

LatencyMatrix read_matrix_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot read " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError(csv_path.string() + ": empty file");
  const auto header = csv::split_line(line);
  if (header.size() < 2) throw FormatError(csv_path.string() + ": header needs column ids");

  LatencyMatrix x;
  const std::size_t ncols = header.size() - 1;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw FormatError(csv_path.string() + ": empty column id in header");
    x.col_labels.push_back(AxisLabel{header[j], std::nullopt});
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::uint8_t>> masks;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != ncols + 1) {
      throw FormatError(csv_path.string() + " line " + std::to_string(line_number) +
                        ": expected " + std::to_string(ncols + 1) + " fields");
    }
    if (fields[0].empty()) {
      throw FormatError(csv_path.string() + " line " + std::to_string(line_number) +
                        ": empty row id");
    }
    x.row_labels.push_back(AxisLabel{fields[0], std::nullopt});
    std::vector<double> vals(ncols, 0.0);
    std::vector<std::uint8_t> mask(ncols, static_cast<std::uint8_t>(MaskState::Missing));
    for (std::size_t j = 0; j < ncols; ++j) {
      if (fields[j + 1].empty()) continue;
      const auto v = csv::to_double(fields[j + 1]);
      if (!v || !std::isfinite(*v)) {
        throw FormatError(csv_path.string() + " line " + std::to_string(line_number) +
                          ": invalid value '" + fields[j + 1] + "'");
      }
      vals[j] = *v;
      mask[j] = static_cast<std::uint8_t>(MaskState::Observed);
    }
    rows.push_back(std::move(vals));
    masks.push_back(std::move(mask));
  }
  if (rows.empty()) throw FormatError(csv_path.string() + ": no data rows");

  x.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  x.mask.resize(x.values.rows(), x.values.cols());
  for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
      x.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      x.mask(i, j) = masks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }

  // The companion mask refines observed into {O, I}; M cells must be empty in
  // the grid. Reading without a companion leaves nonempty cells observed.
  const auto mask_path = mask_companion_path(csv_path);
  std::ifstream mask_in(mask_path);
  if (mask_in) {
    std::string mline;
    if (!std::getline(mask_in, mline)) throw FormatError(mask_path.string() + ": empty file");
    std::size_t mi = 0;
    std::size_t mline_number = 1;
    while (std::getline(mask_in, mline)) {
      ++mline_number;
      if (csv::trim(mline).empty()) continue;
      const auto fields = csv::split_line(mline);
      if (fields.size() != ncols + 1 || mi >= rows.size()) {
        throw FormatError(mask_path.string() + " line " + std::to_string(mline_number) +
                          ": shape disagrees with " + csv_path.string());
      }
      for (std::size_t j = 0; j < ncols; ++j) {
        const std::string& code = fields[j + 1];
        const Eigen::Index i = static_cast<Eigen::Index>(mi);
        const bool has_value =
            x.mask(i, static_cast<Eigen::Index>(j)) != static_cast<std::uint8_t>(MaskState::Missing);
        if (code == "O" || code == "I") {
          if (!has_value) {
            throw FormatError(mask_path.string() + " line " + std::to_string(mline_number) +
                              ": mask marks a present cell but the grid cell is empty");
          }
          x.mask(i, static_cast<Eigen::Index>(j)) = static_cast<std::uint8_t>(
              code == "O" ? MaskState::Observed : MaskState::Interpolated);
        } else if (code == "M") {
          if (has_value) {
            throw FormatError(mask_path.string() + " line " + std::to_string(mline_number) +
                              ": mask marks a missing cell but the grid cell has a value");
          }
        } else {
          throw FormatError(mask_path.string() + " line " + std::to_string(mline_number) +
                            ": invalid mask code '" + code + "'");
        }
      }
      ++mi;
    }
    if (mi != rows.size()) {
      throw FormatError(mask_path.string() + ": shape disagrees with " + csv_path.string());
    }
  }
  x.validate();
  return x;
}

Decomposition<double> decompose(const LatencyMatrix& x, const SolverOptions& opts) {
  x.validate();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (is_present(x.mask(i, j)) && x.values(i, j) < 0) {
        throw InvalidInputError("decompose: negative RTT on a present cell");
      }
    }
  }
  Decomposition<double> d = decompose(x.values, opts);
  // The solver's residual covers all cells (missing ones enter as the 0.0
  // sentinel); also bound the relative residual over present cells only.
  double num = 0, den = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!is_present(x.mask(i, j))) continue;
      const double r = x.values(i, j) - d.L(i, j) - d.S(i, j);
      num += r * r;
      den += x.values(i, j) * x.values(i, j);
    }
  }
  if (den > 0) d.residual = std::max(d.residual, std::sqrt(num / den));
  return d;
}

}  // namespace rttlens
