#include "stallwatch/video_sorter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "stallwatch/error.hpp"

namespace stallwatch::sorting {

std::string_view to_string(LightingClass lighting) {
  switch (lighting) {
    case LightingClass::kDay: return "day";
    case LightingClass::kNight: return "night";
    case LightingClass::kSnow: return "snow";
  }
  return "day";
}

std::string_view to_string(RoadType road) {
  return road == RoadType::kFreeway ? "freeway" : "intersection";
}

LightingClass parse_lighting(std::string_view text) {
  if (text == "day") return LightingClass::kDay;
  if (text == "night") return LightingClass::kNight;
  if (text == "snow") return LightingClass::kSnow;
  throw Error(ErrorCode::kParseError,
              fmt::format("unknown lighting class '{}'", text));
}

RoadType parse_road_type(std::string_view text) {
  if (text == "freeway") return RoadType::kFreeway;
  if (text == "intersection") return RoadType::kIntersection;
  throw Error(ErrorCode::kParseError, fmt::format("unknown road type '{}'", text));
}

const MaskConstants& MaskConstantTable::operator[](LightingClass c) const {
  switch (c) {
    case LightingClass::kNight: return night;
    case LightingClass::kSnow: return snow;
    case LightingClass::kDay: break;
  }
  return day;
}

// --- histograms --------------------------------------------------------------

Histogram frame_histogram(const Frame& frame) {
  std::array<std::uint64_t, 256> counts{};
  for (std::uint8_t v : frame.pixels()) ++counts[v];
  Histogram h{};
  const double n = static_cast<double>(frame.size());
  for (int b = 0; b < 256; ++b) h[b] = static_cast<double>(counts[b]) / n;
  return h;
}

namespace {

void normalize(Histogram& h) {
  double total = 0.0;
  for (double v : h) total += v;
  if (total > 0.0) {
    for (double& v : h) v /= total;
  }
}

}  // namespace

Histogram average_histogram(const io::FrameSequence& seq, std::int64_t stride) {
  if (stride < 1) {
    throw Error(ErrorCode::kInvalidParam, "histogram stride must be >= 1");
  }
  if (seq.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                fmt::format("video '{}' has no frames", seq.video_id()));
  }
  Histogram acc{};
  std::int64_t sampled = 0;
  for (std::int64_t i = 0; i < seq.frame_count(); i += stride) {
    const Histogram h = frame_histogram(seq.frame(i));
    for (int b = 0; b < 256; ++b) acc[b] += h[b];
    ++sampled;
  }
  for (double& v : acc) v /= static_cast<double>(sampled);
  normalize(acc);
  return acc;
}

Histogram average_histogram(std::span<const Frame> frames) {
  if (frames.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no frames to histogram");
  }
  Histogram acc{};
  for (const Frame& f : frames) {
    const Histogram h = frame_histogram(f);
    for (int b = 0; b < 256; ++b) acc[b] += h[b];
  }
  for (double& v : acc) v /= static_cast<double>(frames.size());
  normalize(acc);
  return acc;
}

// --- peaks -------------------------------------------------------------------

namespace {

Histogram smooth(const Histogram& hist, int radius) {
  Histogram out{};
  for (int b = 0; b < 256; ++b) {
    const int lo = std::max(0, b - radius);
    const int hi = std::min(255, b + radius);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += hist[j];
    out[b] = sum / (hi - lo + 1);
  }
  return out;
}

}  // namespace

std::vector<Peak> find_peaks(const Histogram& hist, int smooth_radius,
                             double min_prominence) {
  if (smooth_radius < 0) {
    throw Error(ErrorCode::kInvalidParam, "smooth_radius must be >= 0");
  }
  if (!(min_prominence > 0.0 && min_prominence < 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "min_prominence must be in (0,1)");
  }
  const Histogram s = smooth(hist, smooth_radius);

  std::vector<int> peak_bins;
  int a = 0;
  while (a < 256) {
    // Maximal run of equal values [a, b].
    int b = a;
    while (b + 1 < 256 && s[b + 1] == s[a]) ++b;
    const double h = s[a];
    const bool left_lower = a == 0 || s[a - 1] < h;
    const bool right_lower = b == 255 || s[b + 1] < h;
    if (left_lower && right_lower && !(a == 0 && b == 255)) {
      // Prominence: height above the higher of the two flanking minima. A side
      // that runs into the histogram edge without descending has no base.
      bool has_left = a > 0;
      bool has_right = b < 255;
      double left_min = h;
      for (int j = a - 1; j >= 0 && s[j] <= h; --j) {
        left_min = std::min(left_min, s[j]);
      }
      double right_min = h;
      for (int j = b + 1; j < 256 && s[j] <= h; ++j) {
        right_min = std::min(right_min, s[j]);
      }
      double base = 0.0;
      if (has_left && has_right) {
        base = std::max(left_min, right_min);
      } else if (has_left) {
        base = left_min;
      } else {
        base = right_min;
      }
      if (h - base >= min_prominence) peak_bins.push_back((a + b) / 2);
    }
    a = b + 1;
  }

  // Basins: split at the lowest smoothed bin between consecutive peaks.
  std::vector<Peak> peaks;
  int segment_start = 0;
  for (std::size_t i = 0; i < peak_bins.size(); ++i) {
    int segment_end = 255;
    if (i + 1 < peak_bins.size()) {
      segment_end = peak_bins[i];
      for (int j = peak_bins[i]; j < peak_bins[i + 1]; ++j) {
        if (s[j] < s[segment_end]) segment_end = j;
      }
    }
    double mass = 0.0;
    for (int j = segment_start; j <= segment_end; ++j) mass += hist[j];
    peaks.push_back({peak_bins[i], mass});
    segment_start = segment_end + 1;
  }
  return peaks;
}

LightingClass classify_lighting(const Histogram& hist,
                                const PeakParams& params) {
  const auto peaks = find_peaks(hist, params.smooth_radius,
                                params.min_prominence);
  if (peaks.empty()) return LightingClass::kDay;

  const auto dominant = std::max_element(
      peaks.begin(), peaks.end(),
      [](const Peak& a, const Peak& b) { return a.mass < b.mass; });
  if (dominant->bin <= 50 && dominant->mass >= 0.5) return LightingClass::kNight;

  if (peaks.size() >= 2) {
    double weighted = 0.0;
    double total = 0.0;
    for (const Peak& p : peaks) {
      weighted += p.bin * p.mass;
      total += p.mass;
    }
    const double mean_bin = total > 0.0 ? weighted / total : 0.0;
    if (mean_bin >= 200.0 && mean_bin <= 250.0) return LightingClass::kSnow;
  }
  return LightingClass::kDay;
}

// --- road type ---------------------------------------------------------------

int direction_bin(double dx, double dy) {
  constexpr double kBinWidth = std::numbers::pi / 4.0;
  double angle = std::atan2(dy, dx) + kBinWidth / 2.0;
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  return static_cast<int>(std::floor(angle / kBinWidth)) % 8;
}

int count_directions(std::span<const std::array<double, 2>> vectors,
                     double support_fraction) {
  if (vectors.empty()) return 0;
  std::array<std::size_t, 8> bins{};
  for (const auto& v : vectors) ++bins[direction_bin(v[0], v[1])];
  const double needed = support_fraction * static_cast<double>(vectors.size());
  int count = 0;
  for (std::size_t n : bins) {
    if (n > 0 && static_cast<double>(n) >= needed) ++count;
  }
  return count;
}

int estimate_directions(std::span<const Detection> detections,
                        const DirectionParams& params) {
  std::map<std::int64_t, std::vector<std::array<double, 2>>> centroids;
  for (const Detection& d : detections) {
    centroids[d.frame_index].push_back({d.bbox.center_x(), d.bbox.center_y()});
  }
  if (centroids.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "direction estimation needs detections on at least 2 frames");
  }
  const double gate2 = params.gate_px * params.gate_px;
  const double move2 = params.min_move_px * params.min_move_px;

  std::vector<std::array<double, 2>> vectors;
  auto prev = centroids.begin();
  for (auto cur = std::next(prev); cur != centroids.end(); prev = cur++) {
    for (const auto& c : cur->second) {
      double best = gate2;
      const std::array<double, 2>* match = nullptr;
      for (const auto& p : prev->second) {
        const double dx = c[0] - p[0];
        const double dy = c[1] - p[1];
        const double d2 = dx * dx + dy * dy;
        if (d2 <= best) {
          best = d2;
          match = &p;
        }
      }
      if (match == nullptr) continue;
      const double dx = c[0] - (*match)[0];
      const double dy = c[1] - (*match)[1];
      if (dx * dx + dy * dy >= move2) vectors.push_back({dx, dy});
    }
  }
  return count_directions(vectors, params.support_fraction);
}

RoadType classify_road_type(int direction_count) {
  return direction_count > 2 ? RoadType::kIntersection : RoadType::kFreeway;
}

double background_window_for(LightingClass lighting, RoadType road) {
  return (lighting != LightingClass::kDay || road == RoadType::kIntersection)
             ? kLongWindowSeconds
             : kIdealWindowSeconds;
}

VideoCategory sort_video(const io::FrameSequence& seq,
                         std::span<const Detection> detections,
                         const SortParams& params) {
  const Histogram hist = average_histogram(seq, params.histogram_stride);
  const LightingClass lighting = classify_lighting(hist, params.peaks);

  DirectionParams dir;
  dir.gate_px = params.gate_fraction * seq.width();
  dir.min_move_px = params.min_move_px;
  dir.support_fraction = params.support_fraction;
  // A video without enough detections to track shows no flow; treat it as a
  // freeway so it gets the short window.
  int directions = 0;
  try {
    directions = estimate_directions(detections, dir);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientData) throw;
  }
  const RoadType road = classify_road_type(directions);

  VideoCategory category;
  category.video_id = seq.video_id();
  category.lighting = lighting;
  category.road_type = road;
  category.background_window_s = background_window_for(lighting, road);
  category.k1 = params.mask_constants[lighting].k1;
  category.k2 = params.mask_constants[lighting].k2;
  return category;
}

std::string category_to_json(const VideoCategory& category) {
  nlohmann::ordered_json j;
  j["video_id"] = category.video_id;
  j["lighting"] = to_string(category.lighting);
  j["road_type"] = to_string(category.road_type);
  j["background_window_s"] = category.background_window_s;
  j["k1"] = category.k1;
  j["k2"] = category.k2;
  return j.dump(2) + "\n";
}

VideoCategory category_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text.begin(), text.end());
    VideoCategory c;
    c.video_id = j.at("video_id").get<std::string>();
    c.lighting = parse_lighting(j.at("lighting").get<std::string>());
    c.road_type = parse_road_type(j.at("road_type").get<std::string>());
    c.background_window_s = j.at("background_window_s").get<double>();
    c.k1 = j.at("k1").get<double>();
    c.k2 = j.at("k2").get<double>();
    if (!(c.background_window_s > 0.0) || !(c.k1 > 0.0) || !(c.k2 > 0.0)) {
      throw Error(ErrorCode::kParseError, "category values out of range");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("category: {}", e.what()));
  }
}

}  // namespace stallwatch::sorting
