#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stallwatch {

// Single 8-bit grayscale image, row-major.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::uint8_t fill = 0);
  Frame(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(pixels_).subspan(
        static_cast<std::size_t>(y) * width_, width_);
  }

  bool same_shape(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Axis-aligned box, top-left origin, strictly positive extent.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(w) * h;
  }
  int right() const noexcept { return x + w; }
  int bottom() const noexcept { return y + h; }
  double center_x() const noexcept { return x + w / 2.0; }
  double center_y() const noexcept { return y + h / 2.0; }

  bool valid() const noexcept { return x >= 0 && y >= 0 && w > 0 && h > 0; }
  bool fits(int width, int height) const noexcept {
    return valid() && right() <= width && bottom() <= height;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
  std::int64_t frame_index = 0;
  std::string class_label;
  double score = 0.0;
  BBox bbox;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthEntry {
  std::string video_id;
  double start = 0.0;
  double end = 0.0;

  friend bool operator==(const GroundTruthEntry&,
                         const GroundTruthEntry&) = default;
};

// One row of a predictions CSV.
struct Prediction {
  std::string video_id;
  double start = 0.0;
  double end = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct AnomalyEvent {
  std::string video_id;
  double start = 0.0;
  double end = 0.0;
  BBox bbox;
  double confidence = 0.0;

  Prediction as_prediction() const {
    return {video_id, start, end, confidence};
  }

  friend bool operator==(const AnomalyEvent&, const AnomalyEvent&) = default;
};

}  // namespace stallwatch
