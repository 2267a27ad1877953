#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<Vec>;
using ConstVecRef = Eigen::Ref<const Vec>;

/// Thrown when vector or operator sizes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_size(Eigen::Index got, Eigen::Index expected, const char* what) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

/// Square pixel lattice of side `side`. Pixel k = row * side + col maps to
/// the centred coordinate u = (col - side/2 + 1, row - side/2 + 1), so u1 is
/// the horizontal axis and both coordinates run over {-side/2 + 1, ..., side/2}.
class Grid {
 public:
  Grid() = default;
  explicit Grid(int side) : side_(side) {
    if (side < 2 || side % 2 != 0) {
      throw std::invalid_argument("Grid: side must be even and >= 2, got " + std::to_string(side));
    }
  }

  int side() const { return side_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(side_) * side_; }

  /// Offset between array index and centred coordinate.
  int origin() const { return side_ / 2 - 1; }

  Eigen::Index index(int row, int col) const {
    return static_cast<Eigen::Index>(row) * side_ + col;
  }
  Eigen::Vector2d coord(Eigen::Index k) const {
    const int row = static_cast<int>(k / side_);
    const int col = static_cast<int>(k % side_);
    return {static_cast<double>(col - origin()), static_cast<double>(row - origin())};
  }
  int min_coord() const { return -side_ / 2 + 1; }
  int max_coord() const { return side_ / 2; }

  bool operator==(const Grid& other) const { return side_ == other.side_; }

 private:
  int side_ = 0;
};

/// Background x0 followed by `views` foreground images, stored contiguously.
class ImageStack {
 public:
  ImageStack() = default;
  ImageStack(Grid grid, int views) : grid_(grid), views_(views), data_(Vec::Zero((views + 1) * grid.size())) {}
  ImageStack(Grid grid, int views, Vec data) : grid_(grid), views_(views), data_(std::move(data)) {
    require_size(data_.size(), (views + 1) * grid.size(), "ImageStack");
  }

  const Grid& grid() const { return grid_; }
  int views() const { return views_; }
  Eigen::Index pixels() const { return grid_.size(); }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  auto image(int b) { return data_.segment(b * pixels(), pixels()); }
  auto image(int b) const { return data_.segment(b * pixels(), pixels()); }
  auto background() { return image(0); }
  auto background() const { return image(0); }
  /// Foreground of view j, 1-based as in the measurement model.
  auto foreground(int j) { return image(j); }
  auto foreground(int j) const { return image(j); }

 private:
  Grid grid_;
  int views_ = 0;
  Vec data_;
};

inline double relative_error(const Vec& got, const Vec& expected) {
  const double denom = std::max(expected.norm(), 1e-300);
  return (got - expected).norm() / denom;
}

}  // namespace mvr
