#pragma once

#include <filesystem>

#include "rttlens/dense.hpp"

namespace rttlens {

/// ASCII PGM (P2) grayscale export: values map linearly from [0, scale_max]
/// to gray [255..0] (darker = higher latency); negatives clamp to 0. A zero
/// scale_max renders an all-white image.
void write_pgm(const Eigen::MatrixXd& m, const std::filesystem::path& path, double scale_max);

/// X/L/S triple on one shared scale: the global maximum across the three.
void write_heatmap_triple(const Eigen::MatrixXd& x, const Eigen::MatrixXd& l,
                          const Eigen::MatrixXd& s, const std::filesystem::path& dir,
                          bool shared_scale = true);

}  // namespace rttlens
