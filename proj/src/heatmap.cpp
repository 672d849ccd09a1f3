#include "rttlens/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rttlens/errors.hpp"

namespace rttlens {

void write_pgm(const Eigen::MatrixXd& m, const std::filesystem::path& path, double scale_max) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInputError("write_pgm: empty matrix");
  if (!(scale_max >= 0) || !std::isfinite(scale_max)) {
    throw InvalidInputError("write_pgm: scale must be finite and non-negative");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P2\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      int gray = 255;
      if (scale_max > 0) {
        const double v = std::clamp(m(i, j), 0.0, scale_max);
        gray = 255 - static_cast<int>(std::lround(v / scale_max * 255.0));
      }
      out << gray << (j + 1 < m.cols() ? ' ' : '\n');
    }
  }
}

void write_heatmap_triple(const Eigen::MatrixXd& x, const Eigen::MatrixXd& l,
                          const Eigen::MatrixXd& s, const std::filesystem::path& dir,
                          bool shared_scale) {
  if (l.rows() != x.rows() || l.cols() != x.cols() || s.rows() != x.rows() ||
      s.cols() != x.cols()) {
    throw InvalidInputError("write_heatmap_triple: matrix dimensions disagree");
  }
  const double shared =
      std::max({x.maxCoeff(), l.maxCoeff(), s.maxCoeff(), 0.0});
  const auto scale = [&](const Eigen::MatrixXd& m) {
    return shared_scale ? shared : std::max(m.maxCoeff(), 0.0);
  };
  write_pgm(x, dir / "X.pgm", scale(x));
  write_pgm(l, dir / "L.pgm", scale(l));
  write_pgm(s, dir / "S.pgm", scale(s));
}

}  // namespace rttlens
