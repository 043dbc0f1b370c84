#include "stallwatch/road_mask.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "stallwatch/error.hpp"

namespace stallwatch::mask {

Mask::Mask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidParam, "mask dimensions must be positive");
  }
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::int64_t Mask::count() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

Frame Mask::to_frame() const {
  Frame f(width_, height_);
  auto px = f.pixels();
  for (std::size_t i = 0; i < bits_.size(); ++i) px[i] = bits_[i] ? 255 : 0;
  return f;
}

Mask Mask::from_frame(const Frame& frame) {
  Mask m(frame.width(), frame.height());
  auto px = frame.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) m.bits_[i] = px[i] ? 1 : 0;
  return m;
}

void MaskParams::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !std::isfinite(k1) || !std::isfinite(k2)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("k1={} and k2={} must be positive", k1, k2));
  }
  if (block < 3 || block % 2 == 0) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("block {} must be odd and >= 3", block));
  }
}

int full_frame_block(int width, int height) {
  const int side = std::min(width, height);
  return side % 2 == 1 ? side : side - 1;
}

LocalStats local_stats(const Frame& frame, int block) {
  if (block < 1 || block % 2 == 0) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("block {} must be odd", block));
  }
  if (block > std::min(frame.width(), frame.height())) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("block {} exceeds frame {}x{}", block, frame.width(),
                            frame.height()));
  }
  const int w = frame.width();
  const int h = frame.height();
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  // Integral images of v and v^2 with a zero row/column in front.
  std::vector<std::int64_t> sum(stride * (h + 1), 0);
  std::vector<std::int64_t> sq(stride * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::int64_t row_sum = 0;
    std::int64_t row_sq = 0;
    for (int x = 0; x < w; ++x) {
      const std::int64_t v = frame.at(x, y);
      row_sum += v;
      row_sq += v * v;
      sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row_sum;
      sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + row_sq;
    }
  }
  auto rect = [&](const std::vector<std::int64_t>& t, int x0, int y0, int x1,
                  int y1) {
    return t[y1 * stride + x1] - t[y0 * stride + x1] - t[y1 * stride + x0] +
           t[y0 * stride + x0];
  };

  LocalStats stats;
  stats.width = w;
  stats.height = h;
  stats.mean.resize(static_cast<std::size_t>(w) * h);
  stats.stddev.resize(stats.mean.size());
  const int r = block / 2;
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(w, x + r + 1);
      const std::int64_t n = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
      const std::int64_t s = rect(sum, x0, y0, x1, y1);
      const std::int64_t s2 = rect(sq, x0, y0, x1, y1);
      // n*s2 - s^2 is exact in 64-bit for any frame that fits in memory.
      const double var_num = static_cast<double>(n * s2 - s * s);
      const double nn = static_cast<double>(n);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      stats.mean[i] = static_cast<double>(s) / nn;
      stats.stddev[i] = std::sqrt(std::max(0.0, var_num) / (nn * nn));
    }
  }
  return stats;
}

ThresholdBounds threshold_bounds(double mu, double sigma, double k1, double k2) {
  return {(mu - k1 * sigma) / k2, (mu + k1 * sigma) / (k1 + k2)};
}

Mask adaptive_road_mask(const Frame& background, const MaskParams& params) {
  params.validate();
  const LocalStats stats = local_stats(background, params.block);
  Mask mask(background.width(), background.height());
  for (int y = 0; y < background.height(); ++y) {
    for (int x = 0; x < background.width(); ++x) {
      const auto b = threshold_bounds(stats.mean_at(x, y), stats.stddev_at(x, y),
                                      params.k1, params.k2);
      mask.set(x, y, b.contains(background.at(x, y)));
    }
  }
  return mask;
}

Mask mask_union(std::span<const Mask> masks) {
  if (masks.empty()) {
    throw Error(ErrorCode::kEmptyInput, "union of zero masks");
  }
  Mask out = masks.front();
  for (const Mask& m : masks.subspan(1)) {
    if (!m.same_shape(out)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("mask {}x{} vs {}x{}", m.width(), m.height(),
                              out.width(), out.height()));
    }
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        if (m.at(x, y)) out.set(x, y, true);
      }
    }
  }
  return out;
}

double road_fraction(const BBox& bbox, const Mask& mask) {
  if (!bbox.fits(mask.width(), mask.height())) {
    throw Error(ErrorCode::kInvalidBBox,
                fmt::format("bbox [{}, {}, {}, {}] outside {}x{} mask", bbox.x,
                            bbox.y, bbox.w, bbox.h, mask.width(),
                            mask.height()));
  }
  std::int64_t road = 0;
  for (int y = bbox.y; y < bbox.bottom(); ++y) {
    for (int x = bbox.x; x < bbox.right(); ++x) road += mask.at(x, y) ? 1 : 0;
  }
  return static_cast<double>(road) / static_cast<double>(bbox.area());
}

bool bbox_on_road(const BBox& bbox, const Mask& mask, double min_overlap) {
  if (!(min_overlap > 0.0 && min_overlap <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("min_overlap {} outside (0,1]", min_overlap));
  }
  return road_fraction(bbox, mask) >= min_overlap;
}

std::vector<CalibrationCell> calibrate(const Frame& background,
                                       const Mask& truth,
                                       std::span<const double> k1_grid,
                                       std::span<const double> k2_grid,
                                       int block) {
  if (truth.width() != background.width() ||
      truth.height() != background.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "calibration truth does not match background");
  }
  const std::int64_t road_total = truth.count();
  const std::int64_t off_total =
      static_cast<std::int64_t>(truth.bits().size()) - road_total;
  std::vector<CalibrationCell> cells;
  for (std::size_t row = 0; row < k1_grid.size(); ++row) {
    for (std::size_t col = 0; col < k2_grid.size(); ++col) {
      const double k1 = k1_grid[row];
      const double k2 = k2_grid[col];
      const Mask m = adaptive_road_mask(background, {k1, k2, block});
      std::int64_t hit = 0;
      std::int64_t false_hit = 0;
      auto bits = m.bits();
      auto ref = truth.bits();
      for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i]) continue;
        if (ref[i]) {
          ++hit;
        } else {
          ++false_hit;
        }
      }
      CalibrationCell cell;
      cell.k1 = k1;
      cell.k2 = k2;
      cell.row = static_cast<int>(row);
      cell.col = static_cast<int>(col);
      cell.recall = road_total ? static_cast<double>(hit) / road_total : 1.0;
      cell.false_positive =
          off_total ? static_cast<double>(false_hit) / off_total : 0.0;
      cells.push_back(cell);
    }
  }
  return cells;
}

const CalibrationCell* pick_calibration(std::span<const CalibrationCell> cells,
                                        double min_recall,
                                        double max_false_positive) {
  int rows = 0;
  int cols = 0;
  for (const auto& cell : cells) {
    rows = std::max(rows, cell.row + 1);
    cols = std::max(cols, cell.col + 1);
  }
  std::vector<const CalibrationCell*> grid(static_cast<std::size_t>(rows) * cols,
                                           nullptr);
  for (const auto& cell : cells) {
    if (cell.passes(min_recall, max_false_positive)) {
      grid[static_cast<std::size_t>(cell.row) * cols + cell.col] = &cell;
    }
  }
  auto passing = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < rows && c < cols &&
           grid[static_cast<std::size_t>(r) * cols + c] != nullptr;
  };
  // Depth: radius of the largest all-passing square centred on the cell.
  auto depth = [&](int r, int c) {
    int d = 0;
    for (;; ++d) {
      const int n = d + 1;
      for (int i = -n; i <= n; ++i) {
        if (!passing(r - n, c + i) || !passing(r + n, c + i) ||
            !passing(r + i, c - n) || !passing(r + i, c + n)) {
          return d;
        }
      }
    }
  };

  const CalibrationCell* best = nullptr;
  int best_depth = -1;
  double best_margin = -1.0;
  for (const auto& cell : cells) {
    if (!cell.passes(min_recall, max_false_positive)) continue;
    const int d = depth(cell.row, cell.col);
    const double margin = std::min(cell.recall - min_recall,
                                   max_false_positive - cell.false_positive);
    if (d > best_depth || (d == best_depth && margin > best_margin)) {
      best_depth = d;
      best_margin = margin;
      best = &cell;
    }
  }
  return best;
}

}  // namespace stallwatch::mask
