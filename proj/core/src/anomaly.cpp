#include "stallwatch/anomaly.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "stallwatch/error.hpp"

namespace stallwatch::anomaly {

namespace {

void require_unit(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("{} must be in [0, 1], got {}", name, value));
  }
}

bool intervals_overlap(const AnomalyEvent& a, const AnomalyEvent& b) {
  return a.start <= b.end && b.start <= a.end;
}

}  // namespace

void DecisionParams::validate() const {
  require_unit(score_min, "score_min");
  require_unit(area_min, "area_min");
  require_unit(iou_support, "iou_support");
  require_unit(iou_merge, "iou_merge");
  require_unit(min_support_density, "min_support_density");
  if (min_support_frames < 1) {
    throw Error(ErrorCode::kInvalidParam, "min_support_frames must be >= 1");
  }
  if (min_windows < 1) {
    throw Error(ErrorCode::kInvalidParam, "min_windows must be >= 1");
  }
}

std::int64_t support_frames_for(double seconds, double fps) {
  if (!(seconds >= 0.0) || !(fps > 0.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("bad support duration {} s at {} fps", seconds, fps));
  }
  const auto frames = static_cast<std::int64_t>(std::ceil(seconds * fps - 1e-9));
  return std::max<std::int64_t>(1, frames);
}

double iou(const BBox& a, const BBox& b) {
  const std::int64_t ix =
      std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  const std::int64_t iy =
      std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  const std::int64_t inter = ix * iy;
  if (inter == 0) return 0.0;
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double SupportProfile::density() const {
  if (supporting_frames.empty()) return 0.0;
  return static_cast<double>(supporting_frames.size()) /
         static_cast<double>(last() - first() + 1);
}

std::vector<Candidate> extract_candidates(
    std::span<const WindowDetections> windows, const mask::Mask& road,
    const DecisionParams& params, double min_overlap) {
  const double frame_area =
      static_cast<double>(road.width()) * static_cast<double>(road.height());
  std::vector<Candidate> out;
  for (const WindowDetections& w : windows) {
    for (const Detection& d : w.detections) {
      if (d.score < params.score_min) continue;
      // Boxes from files are not guaranteed to lie inside the frame.
      const int x0 = std::clamp(d.bbox.x, 0, road.width());
      const int y0 = std::clamp(d.bbox.y, 0, road.height());
      const int x1 = std::clamp(d.bbox.right(), 0, road.width());
      const int y1 = std::clamp(d.bbox.bottom(), 0, road.height());
      if (x1 <= x0 || y1 <= y0) continue;
      const BBox box{x0, y0, x1 - x0, y1 - y0};
      if (static_cast<double>(box.area()) < params.area_min * frame_area) {
        continue;
      }
      if (!mask::bbox_on_road(box, road, min_overlap)) continue;
      out.push_back({box, d.score, w.window.start_s, w.window.start_s, 1});
    }
  }
  return out;
}

std::vector<Candidate> merge_candidates(std::vector<Candidate> candidates,
                                        double iou_merge) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.first_seen < b.first_seen;
                   });
  std::vector<Candidate> clusters;
  for (const Candidate& c : candidates) {
    Candidate* best = nullptr;
    double best_iou = -1.0;
    for (Candidate& cluster : clusters) {
      const double v = iou(cluster.bbox, c.bbox);
      if (v >= iou_merge && v > best_iou) {
        best = &cluster;
        best_iou = v;
      }
    }
    if (best == nullptr) {
      clusters.push_back(c);
      continue;
    }
    // Two detections from the same background count as one window.
    if (c.first_seen > best->last_seen) best->windows_seen += c.windows_seen;
    best->first_seen = std::min(best->first_seen, c.first_seen);
    best->last_seen = std::max(best->last_seen, c.last_seen);
    if (c.score > best->score) {
      best->score = c.score;
      best->bbox = c.bbox;
    }
  }
  return clusters;
}

SupportProfile support_profile(const Candidate& candidate,
                               std::span<const Detection> foreground,
                               double iou_threshold) {
  SupportProfile profile;
  for (const Detection& d : foreground) {
    if (iou(candidate.bbox, d.bbox) >= iou_threshold) {
      profile.supporting_frames.push_back(d.frame_index);
    }
  }
  auto& f = profile.supporting_frames;
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return profile;
}

std::optional<AnomalyEvent> decide(const std::string& video_id,
                                   const Candidate& candidate,
                                   const SupportProfile& profile,
                                   const DecisionParams& params, double fps) {
  if (candidate.windows_seen < params.min_windows) return std::nullopt;
  if (profile.empty()) return std::nullopt;
  const auto count = static_cast<std::int64_t>(profile.supporting_frames.size());
  if (count < params.min_support_frames) return std::nullopt;
  if (profile.density() < params.min_support_density) return std::nullopt;
  // A single instant has no duration.
  if (profile.first() == profile.last()) return std::nullopt;
  AnomalyEvent event;
  event.video_id = video_id;
  event.start = static_cast<double>(profile.first()) / fps;
  event.end = static_cast<double>(profile.last()) / fps;
  event.bbox = candidate.bbox;
  event.confidence = candidate.score;
  return event;
}

std::vector<AnomalyEvent> coalesce_events(std::vector<AnomalyEvent> events,
                                          double iou_merge) {
  auto by_time = [](const AnomalyEvent& a, const AnomalyEvent& b) {
    return std::tie(a.start, a.end) < std::tie(b.start, b.end);
  };
  std::stable_sort(events.begin(), events.end(), by_time);
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < events.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < events.size(); ++j) {
        AnomalyEvent& a = events[i];
        const AnomalyEvent& b = events[j];
        if (!intervals_overlap(a, b) || iou(a.bbox, b.bbox) < iou_merge) {
          continue;
        }
        a.start = std::min(a.start, b.start);
        a.end = std::max(a.end, b.end);
        if (b.confidence > a.confidence) {
          a.confidence = b.confidence;
          a.bbox = b.bbox;
        }
        events.erase(events.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
        break;
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), by_time);
  return events;
}

Localization localize_anomalies(const std::string& video_id,
                                std::span<const WindowDetections> windows,
                                const mask::Mask& road,
                                std::span<const Detection> foreground,
                                const DecisionParams& params,
                                double min_overlap, double fps) {
  params.validate();
  Localization out;
  out.candidates = merge_candidates(
      extract_candidates(windows, road, params, min_overlap), params.iou_merge);
  std::vector<AnomalyEvent> accepted;
  for (const Candidate& c : out.candidates) {
    out.profiles.push_back(support_profile(c, foreground, params.iou_support));
    if (auto event = decide(video_id, c, out.profiles.back(), params, fps)) {
      accepted.push_back(std::move(*event));
    }
  }
  out.events = coalesce_events(std::move(accepted), params.iou_merge);
  return out;
}

std::vector<WindowDetections> detect_backgrounds(
    std::span<const background::BackgroundFrame> backgrounds,
    const std::filesystem::path& image_dir, detect::Detector& detector) {
  std::vector<WindowDetections> out;
  for (const auto& bg : backgrounds) {
    detect::ImageRef ref;
    ref.path = image_dir / background::background_file_name(bg.window);
    ref.frame = &bg.frame;
    ref.frame_index = bg.window.first_frame;
    try {
      out.push_back({bg.window, detector.detect(ref)});
    } catch (const Error& e) {
      spdlog::warn("skipping background window at {} s: {}", bg.window.start_s,
                   e.what());
    }
  }
  return out;
}

mask::Mask window_mask(const Frame& background, double k1, double k2,
                       int block) {
  mask::MaskParams params;
  params.k1 = k1;
  params.k2 = k2;
  params.block = block == 0
                     ? mask::full_frame_block(background.width(),
                                              background.height())
                     : block;
  return mask::adaptive_road_mask(background, params);
}

VideoAnalysis detect_anomalies(const io::FrameSequence& seq,
                               const sorting::VideoCategory& category,
                               std::span<const Detection> foreground,
                               detect::Detector& detector,
                               const AnalysisOptions& options,
                               const std::filesystem::path& work_dir) {
  VideoAnalysis out;
  out.backgrounds = background::background_stream(
      seq, category.background_window_s, options.sample_fraction, options.seed);
  background::write_backgrounds(seq.video_id(), out.backgrounds, work_dir);
  for (const auto& bg : out.backgrounds) {
    out.window_masks.push_back(
        window_mask(bg.frame, category.k1, category.k2, options.mask_block));
  }
  out.road = mask::mask_union(out.window_masks);
  out.background_detections =
      detect_backgrounds(out.backgrounds, work_dir, detector);
  out.localization = localize_anomalies(
      seq.video_id(), out.background_detections, out.road, foreground,
      options.decision, options.min_overlap, seq.fps());
  return out;
}

}  // namespace stallwatch::anomaly
