#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stallwatch/background.hpp"
#include "stallwatch/detector.hpp"
#include "stallwatch/road_mask.hpp"
#include "stallwatch/types.hpp"
#include "stallwatch/video_sorter.hpp"

namespace stallwatch::anomaly {

struct DecisionParams {
  double score_min = 0.5;
  // Fraction of the frame area.
  double area_min = 0.001;
  double iou_support = 0.3;
  double iou_merge = 0.5;
  std::int64_t min_support_frames = 1;
  double min_support_density = 0.3;
  int min_windows = 2;

  void validate() const;
};

// Frames needed to cover `seconds` at `fps`, at least one.
std::int64_t support_frames_for(double seconds, double fps);

double iou(const BBox& a, const BBox& b);

// Detections produced on one background image.
struct WindowDetections {
  background::Window window;
  std::vector<Detection> detections;
};

struct Candidate {
  BBox bbox;
  double score = 0.0;
  double first_seen = 0.0;  // start of the first window it appeared in
  double last_seen = 0.0;
  int windows_seen = 1;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct SupportProfile {
  std::vector<std::int64_t> supporting_frames;

  bool empty() const noexcept { return supporting_frames.empty(); }
  std::int64_t first() const { return supporting_frames.front(); }
  std::int64_t last() const { return supporting_frames.back(); }
  double density() const;
};

std::vector<Candidate> extract_candidates(
    std::span<const WindowDetections> windows, const mask::Mask& road,
    const DecisionParams& params, double min_overlap);

std::vector<Candidate> merge_candidates(std::vector<Candidate> candidates,
                                        double iou_merge);

SupportProfile support_profile(const Candidate& candidate,
                               std::span<const Detection> foreground,
                               double iou_threshold);

std::optional<AnomalyEvent> decide(const std::string& video_id,
                                   const Candidate& candidate,
                                   const SupportProfile& profile,
                                   const DecisionParams& params, double fps);

// Merges events whose intervals overlap and whose boxes reach iou_merge,
// repeating until no pair qualifies. Output sorted by start.
std::vector<AnomalyEvent> coalesce_events(std::vector<AnomalyEvent> events,
                                          double iou_merge);

struct Localization {
  std::vector<Candidate> candidates;
  std::vector<SupportProfile> profiles;  // parallel to candidates
  std::vector<AnomalyEvent> events;
};

// Everything downstream of the background detections and the road mask.
Localization localize_anomalies(const std::string& video_id,
                                std::span<const WindowDetections> windows,
                                const mask::Mask& road,
                                std::span<const Detection> foreground,
                                const DecisionParams& params,
                                double min_overlap, double fps);

// Runs the detector on each background. `image_dir` holds the background
// PGMs under background::background_file_name. A window whose detection
// fails is logged and skipped.
std::vector<WindowDetections> detect_backgrounds(
    std::span<const background::BackgroundFrame> backgrounds,
    const std::filesystem::path& image_dir, detect::Detector& detector);

struct AnalysisOptions {
  DecisionParams decision;
  // 0 selects mask::full_frame_block.
  int mask_block = 0;
  double min_overlap = 0.2;
  double sample_fraction = background::kDefaultSampleFraction;
  std::uint64_t seed = 0;
};

struct VideoAnalysis {
  std::vector<background::BackgroundFrame> backgrounds;
  std::vector<mask::Mask> window_masks;
  mask::Mask road;
  std::vector<WindowDetections> background_detections;
  Localization localization;
};

mask::Mask window_mask(const Frame& background, double k1, double k2,
                       int block);

// Full flow for one video. Backgrounds are written to `work_dir` so that
// path-based detectors can read them.
VideoAnalysis detect_anomalies(const io::FrameSequence& seq,
                               const sorting::VideoCategory& category,
                               std::span<const Detection> foreground,
                               detect::Detector& detector,
                               const AnalysisOptions& options,
                               const std::filesystem::path& work_dir);

}  // namespace stallwatch::anomaly
