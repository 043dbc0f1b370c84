#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stallwatch/types.hpp"

namespace stallwatch::scoring {

inline constexpr double kDefaultWindowSeconds = 10.0;
inline constexpr double kRmseCap = 300.0;

struct MatchedPair {
  Prediction prediction;
  GroundTruthEntry truth;
  double start_error = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> true_positives;
  std::vector<Prediction> unmatched_predictions;
  std::vector<GroundTruthEntry> unmatched_truths;

  std::int64_t tp() const noexcept {
    return static_cast<std::int64_t>(true_positives.size());
  }
  std::int64_t fp() const noexcept {
    return static_cast<std::int64_t>(unmatched_predictions.size());
  }
  std::int64_t fn() const noexcept {
    return static_cast<std::int64_t>(unmatched_truths.size());
  }
};

// Within each video, pairs are taken greedily by ascending start-time error;
// a pair is admissible when the error is at most `window`.
MatchResult match(std::span<const Prediction> predictions,
                  std::span<const GroundTruthEntry> truths,
                  double window = kDefaultWindowSeconds);

double f1(const MatchResult& m);
// kRmseCap when there are no true positives.
double rmse(const MatchResult& m);
double nrmse(double rmse_value);
double s4(double f1_value, double rmse_value);

struct VideoScore {
  std::string video_id;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double f1 = 0.0;
  double rmse = kRmseCap;
};

struct ScoreReport {
  double f1 = 0.0;
  double rmse = kRmseCap;
  double nrmse = 1.0;
  double s4 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<VideoScore> per_video;  // sorted by video id
};

ScoreReport score(std::span<const Prediction> predictions,
                  std::span<const GroundTruthEntry> truths,
                  double window = kDefaultWindowSeconds);

std::string report_to_json(const ScoreReport& report);

}  // namespace stallwatch::scoring
