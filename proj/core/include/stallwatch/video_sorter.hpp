#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stallwatch/media_io.hpp"
#include "stallwatch/types.hpp"

namespace stallwatch::sorting {

// Normalized intensity histogram (256 bins summing to 1).
using Histogram = std::array<double, 256>;

enum class LightingClass { kDay, kNight, kSnow };
enum class RoadType { kFreeway, kIntersection };

std::string_view to_string(LightingClass lighting);
std::string_view to_string(RoadType road);
LightingClass parse_lighting(std::string_view text);
RoadType parse_road_type(std::string_view text);

struct Peak {
  int bin = 0;
  // Share of the raw histogram mass in this peak's basin.
  double mass = 0.0;

  friend bool operator==(const Peak&, const Peak&) = default;
};

struct PeakParams {
  int smooth_radius = 5;
  double min_prominence = 0.005;
};

struct DirectionParams {
  double gate_px = 32.0;
  double min_move_px = 2.0;
  double support_fraction = 0.05;
};

struct MaskConstants {
  double k1 = 0.0;
  double k2 = 0.0;
};

// (k1, k2) per lighting class.
struct MaskConstantTable {
  MaskConstants day{2.75, 0.45};
  MaskConstants night{2.70, 0.75};
  MaskConstants snow{3.10, 0.40};

  const MaskConstants& operator[](LightingClass c) const;
};

struct VideoCategory {
  std::string video_id;
  LightingClass lighting = LightingClass::kDay;
  RoadType road_type = RoadType::kFreeway;
  double background_window_s = 30.0;
  double k1 = 0.0;
  double k2 = 0.0;

  friend bool operator==(const VideoCategory&, const VideoCategory&) = default;
};

inline constexpr double kIdealWindowSeconds = 30.0;
inline constexpr double kLongWindowSeconds = 300.0;

Histogram frame_histogram(const Frame& frame);
Histogram average_histogram(const io::FrameSequence& seq, std::int64_t stride);
// Same as above over in-memory frames.
Histogram average_histogram(std::span<const Frame> frames);

std::vector<Peak> find_peaks(const Histogram& hist, int smooth_radius,
                             double min_prominence);

LightingClass classify_lighting(const Histogram& hist,
                                const PeakParams& params = {});

// Angle bin (0..7) of a displacement; bins are 45 degrees wide and centred
// on the image axes and diagonals.
int direction_bin(double dx, double dy);
// Number of angle bins holding at least `support_fraction` of the vectors.
int count_directions(std::span<const std::array<double, 2>> vectors,
                     double support_fraction);

int estimate_directions(std::span<const Detection> detections,
                        const DirectionParams& params);

RoadType classify_road_type(int direction_count);

double background_window_for(LightingClass lighting, RoadType road);

struct SortParams {
  std::int64_t histogram_stride = 10;
  PeakParams peaks;
  // Association gate as a fraction of frame width.
  double gate_fraction = 0.1;
  double min_move_px = 2.0;
  double support_fraction = 0.05;
  MaskConstantTable mask_constants;
};

VideoCategory sort_video(const io::FrameSequence& seq,
                         std::span<const Detection> detections,
                         const SortParams& params);

std::string category_to_json(const VideoCategory& category);
VideoCategory category_from_json(std::string_view text);

}  // namespace stallwatch::sorting
