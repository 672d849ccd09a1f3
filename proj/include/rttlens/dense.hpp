#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace rttlens {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Per-entry observation state, stored alongside the value grid.
/// Missing entries hold a 0.0 sentinel in the value matrix and must never be
/// read as data.
enum class MaskState : std::uint8_t {
  Missing = 0,
  Observed = 1,
  Interpolated = 2,
};

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline bool is_present(std::uint8_t state) {
  return state != static_cast<std::uint8_t>(MaskState::Missing);
}

}  // namespace rttlens
