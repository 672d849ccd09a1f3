#pragma once

// Shared fixture builders for the test binaries: hand-rolled latency
// matrices, cluster-structured synthetic specs, planted sparse-plus-low-rank
// models, and a scratch-directory guard.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rttlens/latency_matrix.hpp"
#include "rttlens/rng.hpp"
#include "rttlens/synthetic.hpp"
#include "rttlens/tags.hpp"

namespace test_support {

inline std::string padded_id(const char* prefix, std::size_t i) {
  std::string n = std::to_string(i);
  if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
  return prefix + n;
}

/// Wraps a dense grid as a fully observed latency matrix with generated ids.
inline rttlens::LatencyMatrix full_matrix(const Eigen::MatrixXd& values) {
  rttlens::LatencyMatrix x;
  x.values = values;
  x.mask = rttlens::MaskMatrix::Constant(values.rows(), values.cols(),
                                         static_cast<std::uint8_t>(rttlens::MaskState::Observed));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    x.row_labels.push_back({padded_id("s", static_cast<std::size_t>(i)), std::nullopt});
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    x.col_labels.push_back({padded_id("p", static_cast<std::size_t>(j)), std::nullopt});
  }
  return x;
}

inline rttlens::EndpointTag tag_of(std::uint32_t asn, std::string city, std::string country) {
  rttlens::EndpointTag t;
  t.asn = asn;
  t.city = std::move(city);
  t.country = std::move(country);
  const auto continent = rttlens::continent_of_country(t.country);
  if (!continent) throw std::runtime_error("test fixture uses unknown country " + t.country);
  t.continent = *continent;
  return t;
}

// Country pool whose continents span the globe; continents resolve from the
// shipped ISO table, so generated cluster tags always pass validation.
inline constexpr std::array<const char*, 6> kCountryPool = {"DE", "JP", "US", "AU", "BR", "ZA"};

/// `total` split into `parts` sizes differing by at most one.
inline std::vector<int> even_sizes(int total, int parts) {
  std::vector<int> sizes(static_cast<std::size_t>(parts), total / parts);
  for (int i = 0; i < total % parts; ++i) sizes[static_cast<std::size_t>(i)] += 1;
  return sizes;
}

/// `a_count` clusters of `a_size` members followed by `b_count` of `b_size`.
inline std::vector<int> mixed_sizes(int a_count, int a_size, int b_count, int b_size) {
  std::vector<int> sizes;
  sizes.insert(sizes.end(), static_cast<std::size_t>(a_count), a_size);
  sizes.insert(sizes.end(), static_cast<std::size_t>(b_count), b_size);
  return sizes;
}

/// One cluster per entry of `sizes`, each with a distinct (asn, city) pair.
inline std::vector<rttlens::ClusterSpec> make_clusters(const std::vector<int>& sizes,
                                                       std::uint32_t asn_base,
                                                       const std::string& city_prefix) {
  std::vector<rttlens::ClusterSpec> clusters;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    rttlens::ClusterSpec spec;
    spec.asn = asn_base + static_cast<std::uint32_t>(c);
    spec.city = city_prefix + std::to_string(c);
    spec.country = kCountryPool[c % kCountryPool.size()];
    spec.continent = *rttlens::continent_of_country(spec.country);
    spec.members = sizes[c];
    clusters.push_back(std::move(spec));
  }
  return clusters;
}

/// Cluster-of-row lookup from contiguous member counts.
inline std::vector<std::size_t> cluster_of_index(const std::vector<rttlens::ClusterSpec>& clusters) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    out.insert(out.end(), static_cast<std::size_t>(clusters[c].members), c);
  }
  return out;
}

/// Cluster grid with additive means (row effect + column effect + small
/// interaction): `row_sizes` clusters over the sources, `col_sizes` over the
/// prefixes. Means are drawn once per seed from a stream decoupled from the
/// generator's jitter stream.
inline rttlens::SyntheticSpec cluster_grid_spec(const std::vector<int>& row_sizes,
                                                const std::vector<int>& col_sizes,
                                                double jitter_ms, std::uint64_t seed) {
  rttlens::SyntheticSpec spec;
  for (int s : row_sizes) spec.n_sources += s;
  for (int s : col_sizes) spec.n_prefixes += s;
  spec.row_clusters = make_clusters(row_sizes, 64500, "src-city-");
  spec.col_clusters = make_clusters(col_sizes, 65000, "dst-city-");
  rttlens::Rng mean_rng(seed ^ 0x5bf03635dcf66e37ULL);
  spec.cluster_means =
      rttlens::additive_cluster_means(static_cast<int>(row_sizes.size()),
                                      static_cast<int>(col_sizes.size()), 4.0, 60.0, 3.0, mean_rng);
  spec.jitter_ms = jitter_ms;
  spec.seed = seed;
  return spec;
}

/// 47 sources in 26 clusters (21 pairs + 5 singletons) by 80 prefixes in 30
/// clusters (20 triples + 10 pairs). Small enough to decompose in tens of
/// milliseconds, clustered enough that every mean-grid direction survives the
/// solver's sparsity budget.
inline rttlens::SyntheticSpec detour_grid_spec(std::uint64_t seed) {
  return cluster_grid_spec(mixed_sizes(21, 2, 5, 1), mixed_sizes(20, 3, 10, 2), 0.5, seed);
}

/// Plants `count` detour cells on distinct positions: inflation is
/// max(1.5 * base, 10) scaled by U[1.05, 2), so every planted cell clears
/// both the relative and the absolute qualifying bars with margin.
inline void plant_detours(rttlens::SyntheticSpec& spec, int count) {
  const auto [x0, base] = rttlens::generate(spec);
  const Eigen::Index n = base.L0.cols();
  rttlens::Rng rng(spec.seed ^ 0x94d049bb133111ebULL);
  const auto cells =
      rng.sample_indices(static_cast<std::size_t>(base.L0.size()), static_cast<std::size_t>(count));
  for (const std::size_t cell : cells) {
    rttlens::PlantedAnomaly a;
    a.row = static_cast<Eigen::Index>(cell) / n;
    a.col = static_cast<Eigen::Index>(cell) % n;
    const double l0 = base.L0(a.row, a.col);
    a.inflation_ms = std::max(1.5 * l0, 10.0) * rng.next_uniform(1.05, 2.0);
    spec.anomalies.push_back(a);
  }
}

/// Plants one low-contrast detour and returns its cell: among cells whose row
/// and column clusters both have a sibling (a sibling pins the low-rank part,
/// keeping the inflation out of it), picks the one whose inflated value lands
/// closest to 1.2x its row mean and inflates it by 1.6x the local base. The
/// planted cell then clears a ratio threshold of 1 even when the solver
/// shifts a few ms of the inflation into the expectation, while the measured
/// value stays inside its row's two-sigma band.
inline std::pair<Eigen::Index, Eigen::Index> plant_low_detour(rttlens::SyntheticSpec& spec) {
  const auto [x0, base] = rttlens::generate(spec);
  const auto row_cluster = cluster_of_index(spec.row_clusters);
  const auto col_cluster = cluster_of_index(spec.col_clusters);
  const Eigen::Index m = base.L0.rows();
  const Eigen::Index n = base.L0.cols();

  Eigen::Index best_i = -1;
  Eigen::Index best_j = -1;
  double best_miss = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (spec.row_clusters[row_cluster[static_cast<std::size_t>(i)]].members < 2) continue;
    const double row_mean = base.L0.row(i).mean();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (spec.col_clusters[col_cluster[static_cast<std::size_t>(j)]].members < 2) continue;
      const double l0 = base.L0(i, j);
      if (l0 < 7.5) continue;  // keeps the planted magnitude at 12 ms or more
      const double miss = std::abs(2.6 * l0 - 1.2 * row_mean);
      if (best_i < 0 || miss < best_miss) {
        best_i = i;
        best_j = j;
        best_miss = miss;
      }
    }
  }
  if (best_i < 0) throw std::runtime_error("no eligible low-detour cell in fixture");

  rttlens::PlantedAnomaly a;
  a.row = best_i;
  a.col = best_j;
  a.inflation_ms = 1.6 * base.L0(best_i, best_j);
  spec.anomalies.push_back(a);
  return {best_i, best_j};
}

struct PlantedModel {
  Eigen::MatrixXd X;
  Eigen::MatrixXd L0;
  Eigen::MatrixXd S0;
};

/// L0 = A * B^T with standard normal factors; S0 carries +-magnitude spikes
/// on a uniformly drawn support of `spike_fraction * m * n` cells.
inline PlantedModel planted_model(Eigen::Index m, Eigen::Index n, Eigen::Index rank,
                                  double spike_fraction, double magnitude, std::uint64_t seed) {
  rttlens::Rng rng(seed);
  Eigen::MatrixXd a(m, rank);
  Eigen::MatrixXd b(n, rank);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index r = 0; r < rank; ++r) a(i, r) = rng.next_normal();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index r = 0; r < rank; ++r) b(j, r) = rng.next_normal();
  }
  PlantedModel out;
  out.L0 = a * b.transpose();
  out.S0 = Eigen::MatrixXd::Zero(m, n);
  const auto spikes = static_cast<std::size_t>(
      std::llround(spike_fraction * static_cast<double>(m) * static_cast<double>(n)));
  for (const std::size_t cell : rng.sample_indices(static_cast<std::size_t>(m * n), spikes)) {
    const auto i = static_cast<Eigen::Index>(cell) / n;
    const auto j = static_cast<Eigen::Index>(cell) % n;
    out.S0(i, j) = (rng.next_u64() & 1) ? magnitude : -magnitude;
  }
  out.X = out.L0 + out.S0;
  return out;
}

inline double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double denom = want.norm();
  const double diff = (got - want).norm();
  return denom > 0 ? diff / denom : diff;
}

inline Eigen::PermutationMatrix<Eigen::Dynamic> random_permutation(Eigen::Index n,
                                                                   rttlens::Rng& rng) {
  Eigen::VectorXi indices(n);
  for (Eigen::Index i = 0; i < n; ++i) indices(i) = static_cast<int>(i);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(indices(i), indices(j));
  }
  return Eigen::PermutationMatrix<Eigen::Dynamic>(indices);
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "rttlens-test-XXXXXX").string();
    if (::mkdtemp(templ.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test_support
