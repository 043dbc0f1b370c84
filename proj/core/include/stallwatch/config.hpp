#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "stallwatch/anomaly.hpp"
#include "stallwatch/detector.hpp"
#include "stallwatch/video_sorter.hpp"

namespace stallwatch::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 7;
  // Worker threads for corpus runs; 0 uses the hardware concurrency.
  int jobs = 1;

  double sample_fraction = background::kDefaultSampleFraction;
  // When positive, replaces the window chosen by video sorting.
  double window_override_s = 0.0;

  sorting::SortParams sorting;

  // 0 selects the largest odd block that fits the frame.
  int mask_block = 0;
  double min_overlap = 0.2;

  anomaly::DecisionParams decision;
  // Resolved against each video's frame rate into decision.min_support_frames.
  double min_support_seconds = 1.0;

  detect::DetectorSpec detector;
  double match_window_s = 10.0;

  void validate() const;
  anomaly::DecisionParams decision_for(double fps) const;
  anomaly::AnalysisOptions analysis_options(double fps) const;
};

// Complete configuration with every key present.
std::string config_to_json(const PipelineConfig& config);
// Keys may be omitted (defaults apply); unknown keys, wrong types and
// out-of-range values raise ConfigError.
PipelineConfig config_from_json(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

}  // namespace stallwatch::pipeline
