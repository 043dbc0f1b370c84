#include "stallwatch/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "stallwatch/error.hpp"

namespace stallwatch::scoring {

namespace {

struct VideoLists {
  std::vector<Prediction> predictions;
  std::vector<GroundTruthEntry> truths;
};

void match_video(VideoLists& lists, double window, MatchResult& out) {
  auto& preds = lists.predictions;
  auto& gts = lists.truths;
  std::sort(preds.begin(), preds.end(), [](const Prediction& a, const Prediction& b) {
    return std::tie(a.start, a.end, a.confidence) <
           std::tie(b.start, b.end, b.confidence);
  });
  std::sort(gts.begin(), gts.end(),
            [](const GroundTruthEntry& a, const GroundTruthEntry& b) {
              return std::tie(a.start, a.end) < std::tie(b.start, b.end);
            });
  for (std::size_t i = 1; i < gts.size(); ++i) {
    if (gts[i].start == gts[i - 1].start && gts[i].end == gts[i - 1].end) {
      throw Error(ErrorCode::kDuplicateGroundTruth,
                  fmt::format("video '{}' lists [{}, {}] twice",
                              gts[i].video_id, gts[i].start, gts[i].end));
    }
  }

  struct Pair {
    double error;
    std::size_t gt;
    std::size_t pred;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const double error = std::fabs(preds[p].start - gts[g].start);
      if (error <= window) pairs.push_back({error, g, p});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.error, a.gt, a.pred) < std::tie(b.error, b.gt, b.pred);
  });
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> pred_used(preds.size(), false);
  for (const Pair& pair : pairs) {
    if (gt_used[pair.gt] || pred_used[pair.pred]) continue;
    gt_used[pair.gt] = true;
    pred_used[pair.pred] = true;
    out.true_positives.push_back({preds[pair.pred], gts[pair.gt], pair.error});
  }
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!pred_used[p]) out.unmatched_predictions.push_back(preds[p]);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) out.unmatched_truths.push_back(gts[g]);
  }
}

std::map<std::string, VideoLists> group(std::span<const Prediction> predictions,
                                        std::span<const GroundTruthEntry> truths) {
  std::map<std::string, VideoLists> videos;
  for (const Prediction& p : predictions) videos[p.video_id].predictions.push_back(p);
  for (const GroundTruthEntry& g : truths) videos[g.video_id].truths.push_back(g);
  return videos;
}

}  // namespace

MatchResult match(std::span<const Prediction> predictions,
                  std::span<const GroundTruthEntry> truths, double window) {
  if (!(window >= 0.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("match window must be >= 0, got {}", window));
  }
  MatchResult out;
  for (auto& [id, lists] : group(predictions, truths)) {
    match_video(lists, window, out);
  }
  return out;
}

double f1(const MatchResult& m) {
  const std::int64_t tp = m.tp();
  const std::int64_t denom = 2 * tp + m.fp() + m.fn();
  if (denom == 0) {
    throw Error(ErrorCode::kUndefinedScore,
                "F1 is undefined without predictions or ground truth");
  }
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double rmse(const MatchResult& m) {
  if (m.true_positives.empty()) return kRmseCap;
  double sum = 0.0;
  for (const MatchedPair& pair : m.true_positives) {
    sum += pair.start_error * pair.start_error;
  }
  return std::sqrt(sum / static_cast<double>(m.true_positives.size()));
}

double nrmse(double rmse_value) {
  if (!(rmse_value >= 0.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("rmse must be >= 0, got {}", rmse_value));
  }
  return std::min(rmse_value, kRmseCap) / kRmseCap;
}

double s4(double f1_value, double rmse_value) {
  if (!(f1_value >= 0.0 && f1_value <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("f1 must be in [0, 1], got {}", f1_value));
  }
  return f1_value * (1.0 - nrmse(rmse_value));
}

ScoreReport score(std::span<const Prediction> predictions,
                  std::span<const GroundTruthEntry> truths, double window) {
  ScoreReport report;
  MatchResult all;
  for (auto& [id, lists] : group(predictions, truths)) {
    MatchResult video;
    match_video(lists, window, video);
    VideoScore vs;
    vs.video_id = id;
    vs.tp = video.tp();
    vs.fp = video.fp();
    vs.fn = video.fn();
    vs.f1 = f1(video);
    vs.rmse = rmse(video);
    report.per_video.push_back(vs);
    for (auto& tp : video.true_positives) all.true_positives.push_back(std::move(tp));
    for (auto& p : video.unmatched_predictions) {
      all.unmatched_predictions.push_back(std::move(p));
    }
    for (auto& g : video.unmatched_truths) all.unmatched_truths.push_back(std::move(g));
  }
  report.tp = all.tp();
  report.fp = all.fp();
  report.fn = all.fn();
  report.f1 = f1(all);
  report.rmse = rmse(all);
  report.nrmse = nrmse(report.rmse);
  report.s4 = s4(report.f1, report.rmse);
  return report;
}

std::string report_to_json(const ScoreReport& report) {
  nlohmann::ordered_json j;
  j["f1"] = report.f1;
  j["rmse"] = report.rmse;
  j["nrmse"] = report.nrmse;
  j["s4"] = report.s4;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["per_video"] = nlohmann::ordered_json::array();
  for (const VideoScore& v : report.per_video) {
    nlohmann::ordered_json row;
    row["video_id"] = v.video_id;
    row["tp"] = v.tp;
    row["fp"] = v.fp;
    row["fn"] = v.fn;
    row["f1"] = v.f1;
    row["rmse"] = v.rmse;
    j["per_video"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

}  // namespace stallwatch::scoring
