#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stallwatch/types.hpp"

namespace stallwatch::mask {

// Binary road mask, 1 = road.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool road) { bits_[index(x, y)] = road ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::int64_t count() const;
  bool same_shape(const Mask& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  // 0 = off-road, 255 = road.
  Frame to_frame() const;
  // Any non-zero pixel is road.
  static Mask from_frame(const Frame& frame);

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct MaskParams {
  double k1 = 2.0;
  double k2 = 2.0;
  int block = 31;

  void validate() const;
};

struct LocalStats {
  int width = 0;
  int height = 0;
  std::vector<double> mean;
  std::vector<double> stddev;

  double mean_at(int x, int y) const {
    return mean[static_cast<std::size_t>(y) * width + x];
  }
  double stddev_at(int x, int y) const {
    return stddev[static_cast<std::size_t>(y) * width + x];
  }
};

// Mean and population standard deviation over the block x block neighbourhood
// of every pixel, truncated at the image border.
LocalStats local_stats(const Frame& frame, int block);

// Largest odd block that fits the frame.
int full_frame_block(int width, int height);

struct ThresholdBounds {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double t) const noexcept { return lower <= t && t <= upper; }
};

// [(mu - k1*sigma)/k2, (mu + k1*sigma)/(k1 + k2)]
ThresholdBounds threshold_bounds(double mu, double sigma, double k1, double k2);

// Road iff (mu - k1*sigma)/k2 <= T <= (mu + k1*sigma)/(k1 + k2).
Mask adaptive_road_mask(const Frame& background, const MaskParams& params);

Mask mask_union(std::span<const Mask> masks);

double road_fraction(const BBox& bbox, const Mask& mask);
bool bbox_on_road(const BBox& bbox, const Mask& mask, double min_overlap);

// --- calibration -------------------------------------------------------------

struct CalibrationCell {
  double k1 = 0.0;
  double k2 = 0.0;
  double recall = 0.0;           // road pixels marked road
  double false_positive = 0.0;   // off-road pixels marked road
  int row = 0;                   // position in the k1 grid
  int col = 0;                   // position in the k2 grid

  bool passes(double min_recall, double max_false_positive) const {
    return recall >= min_recall && false_positive <= max_false_positive;
  }
};

// Scores every (k1, k2) pair of the grid against a reference road mask.
std::vector<CalibrationCell> calibrate(const Frame& background,
                                       const Mask& truth,
                                       std::span<const double> k1_grid,
                                       std::span<const double> k2_grid,
                                       int block);

// Among passing cells, the one deepest inside the passing region of the grid
// (ties broken by the margin on both criteria); nullptr when none passes.
const CalibrationCell* pick_calibration(std::span<const CalibrationCell> cells,
                                        double min_recall,
                                        double max_false_positive);

}  // namespace stallwatch::mask
