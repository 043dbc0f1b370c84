#include <algorithm>

#include <gtest/gtest.h>

#include "stallwatch/anomaly.hpp"
#include "stallwatch/hashing.hpp"
#include "stallwatch/synth.hpp"
#include "test_support.hpp"

namespace stallwatch::anomaly {
namespace {

background::Window window_at(double start_s, double fps = 10.0) {
  background::Window w;
  w.start_s = start_s;
  w.end_s = start_s + 30.0;
  w.first_frame = static_cast<std::int64_t>(start_s * fps);
  w.end_frame = static_cast<std::int64_t>((start_s + 30.0) * fps);
  return w;
}

Detection det(BBox b, double score = 0.9, std::int64_t frame = 0) {
  return {frame, "car", score, b};
}

BBox random_box(Rng& rng, int extent = 100) {
  const int x = static_cast<int>(rng.below(extent));
  const int y = static_cast<int>(rng.below(extent));
  return {x, y, 1 + static_cast<int>(rng.below(extent)),
          1 + static_cast<int>(rng.below(extent))};
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {20, 20, 5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 1.0 / 3.0);
}

TEST(Iou, SymmetryIdentityBounds) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const double v = iou(a, b);
    ASSERT_EQ(v, iou(b, a));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_EQ(iou(a, a), 1.0);
  }
}

TEST(Decision, SupportFrames) {
  EXPECT_EQ(support_frames_for(1.0, 30.0), 30);
  EXPECT_EQ(support_frames_for(1.0, 29.97), 30);
  EXPECT_EQ(support_frames_for(0.0, 10.0), 1);
  EXPECT_ERROR_CODE(support_frames_for(1.0, 0.0), ErrorCode::kInvalidParam);
}

TEST(Decision, ParamValidation) {
  DecisionParams p;
  EXPECT_NO_THROW(p.validate());
  p.score_min = 1.5;
  EXPECT_ERROR_CODE(p.validate(), ErrorCode::kInvalidParam);
  p = {};
  p.min_windows = 0;
  EXPECT_ERROR_CODE(p.validate(), ErrorCode::kInvalidParam);
}

class Extract : public ::testing::Test {
 protected:
  Extract() : road(100, 100) {
    for (int y = 40; y < 60; ++y) {
      for (int x = 0; x < 100; ++x) road.set(x, y, true);
    }
  }
  std::vector<Candidate> run(const Detection& d) {
    std::vector<WindowDetections> w{{window_at(30.0), {d}}};
    return extract_candidates(w, road, params, 0.2);
  }
  mask::Mask road;
  DecisionParams params;
};

TEST_F(Extract, KeptOnRoad) {
  // 50 px = 0.5% of the frame.
  const auto c = run(det({10, 45, 10, 5}, 0.9));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].first_seen, 30.0);
  EXPECT_EQ(c[0].windows_seen, 1);
}

TEST_F(Extract, Gates) {
  EXPECT_TRUE(run(det({10, 5, 10, 5}, 0.9)).empty());     // off road
  EXPECT_TRUE(run(det({10, 45, 10, 5}, 0.3)).empty());    // score
  EXPECT_TRUE(run(det({10, 45, 3, 3}, 0.9)).empty());     // 9 px < 10 px
  EXPECT_EQ(run(det({90, 45, 20, 5}, 0.9))[0].bbox, (BBox{90, 45, 10, 5}));
}

TEST(Merge, SameBoxAcrossWindows) {
  std::vector<Candidate> c;
  for (double t : {0.0, 30.0, 60.0}) c.push_back({{5, 5, 10, 10}, 0.8, t, t, 1});
  const auto m = merge_candidates(c, 0.5);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].windows_seen, 3);
  EXPECT_EQ(m[0].first_seen, 0.0);
  EXPECT_EQ(m[0].last_seen, 60.0);
}

TEST(Merge, Gate) {
  // IoU 1/9 stays apart; IoU exactly 1/2 merges.
  std::vector<Candidate> apart{{{0, 0, 10, 10}, 0.8, 0, 0, 1},
                               {{8, 0, 10, 10}, 0.8, 30, 30, 1}};
  EXPECT_EQ(merge_candidates(apart, 0.5).size(), 2u);
  std::vector<Candidate> half{{{0, 0, 12, 10}, 0.6, 0, 0, 1},
                              {{0, 0, 6, 10}, 0.9, 30, 30, 1}};
  ASSERT_DOUBLE_EQ(iou(half[0].bbox, half[1].bbox), 0.5);
  const auto m = merge_candidates(half, 0.5);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].score, 0.9);
  EXPECT_EQ(m[0].bbox, (BBox{0, 0, 6, 10}));
}

TEST(Merge, SameWindowCountsOnce) {
  std::vector<Candidate> c{{{0, 0, 10, 10}, 0.8, 0, 0, 1},
                           {{1, 0, 10, 10}, 0.7, 0, 0, 1}};
  EXPECT_EQ(merge_candidates(c, 0.5)[0].windows_seen, 1);
}

TEST(Support, ContiguousRun) {
  const Candidate cand{{10, 10, 20, 10}, 0.9, 0, 30, 2};
  std::vector<Detection> fg;
  for (std::int64_t f = 100; f <= 200; ++f) fg.push_back(det(cand.bbox, 1.0, f));
  fg.push_back(det({60, 60, 5, 5}, 1.0, 50));
  const auto p = support_profile(cand, fg, 0.3);
  ASSERT_EQ(p.supporting_frames.size(), 101u);
  EXPECT_EQ(p.first(), 100);
  EXPECT_EQ(p.last(), 200);
  EXPECT_DOUBLE_EQ(p.density(), 1.0);
  EXPECT_TRUE(support_profile(cand, std::vector<Detection>{}, 0.3).empty());
}

TEST(Support, MatchesBruteForceOnSyntheticStall) {
  synth::SceneSpec s;
  s.video_id = "sp";
  s.duration_s = 20.0;
  s.fps = 10.0;
  s.width = 160;
  s.height = 100;
  s.roads = {{synth::Axis::kHorizontal, 40, 24}};
  s.lanes = {{synth::Axis::kHorizontal, 52.0, 1}};
  synth::VehicleSpec v;
  v.speed = 30.0;
  v.stall = synth::Stall{3.0, 12.0};
  s.vehicles = {v};
  const auto fg = synth::oracle_detections(s);
  const auto stalled = synth::vehicle_box(s, v, 7.0);
  ASSERT_TRUE(stalled.has_value());
  const Candidate cand{*stalled, 1.0, 0, 10, 2};
  std::vector<std::int64_t> expected;
  for (std::int64_t f = 0; f < s.frame_count(); ++f) {
    bool hit = false;
    for (const auto& d : fg) {
      if (d.frame_index != f) continue;
      const BBox& a = cand.bbox;
      const BBox& b = d.bbox;
      const int ix = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
      const int iy = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
      const double inter = static_cast<double>(ix) * iy;
      if (inter / (a.area() + b.area() - inter) >= 0.3) hit = true;
    }
    if (hit) expected.push_back(f);
  }
  EXPECT_EQ(support_profile(cand, fg, 0.3).supporting_frames, expected);
  ASSERT_FALSE(expected.empty());
  EXPECT_LE(expected.front(), 30);
  EXPECT_GE(expected.back(), 119);
}

TEST(Decide, ContiguousSupport) {
  DecisionParams p;
  p.min_support_frames = 30;
  p.min_support_density = 0.5;
  const Candidate cand{{0, 0, 10, 10}, 0.75, 0, 30, 2};
  SupportProfile prof;
  for (std::int64_t f = 100; f <= 200; ++f) prof.supporting_frames.push_back(f);
  const auto e = decide("v", cand, prof, p, 30.0);
  ASSERT_TRUE(e.has_value());
  EXPECT_DOUBLE_EQ(e->start, 100.0 / 30.0);
  EXPECT_DOUBLE_EQ(e->end, 200.0 / 30.0);
  EXPECT_EQ(e->confidence, 0.75);
  EXPECT_EQ(e->bbox, cand.bbox);
}

TEST(Decide, Rejections) {
  DecisionParams p;
  p.min_support_frames = 30;
  p.min_support_density = 0.5;
  const Candidate cand{{0, 0, 10, 10}, 0.75, 0, 30, 2};
  SupportProfile sparse{{0, 700, 1500, 2200, 2999}};
  EXPECT_FALSE(decide("v", cand, sparse, p, 30.0).has_value());
  EXPECT_FALSE(decide("v", cand, SupportProfile{}, p, 30.0).has_value());
  SupportProfile dense;
  for (std::int64_t f = 0; f < 60; ++f) dense.supporting_frames.push_back(f);
  Candidate once = cand;
  once.windows_seen = 1;
  EXPECT_FALSE(decide("v", once, dense, p, 30.0).has_value());
}

// Raising the support gate can trim an outlying frame, shrink the span and
// lift the density above its threshold.
TEST(Decide, DensityCanRiseWithSupportGate) {
  const Candidate cand{{0, 0, 10, 10}, 0.9, 0, 30, 2};
  std::vector<Detection> fg{det({0, 0, 10, 4}, 1.0, 0)};  // IoU 0.4
  for (std::int64_t f = 50; f < 60; ++f) fg.push_back(det(cand.bbox, 1.0, f));
  DecisionParams p;
  p.min_support_frames = 5;
  const auto loose = support_profile(cand, fg, 0.3);
  const auto tight = support_profile(cand, fg, 0.5);
  EXPECT_EQ(loose.supporting_frames.size(), 11u);
  EXPECT_EQ(tight.supporting_frames.size(), 10u);
  EXPECT_FALSE(decide("v", cand, loose, p, 10.0).has_value());
  EXPECT_TRUE(decide("v", cand, tight, p, 10.0).has_value());
}

TEST(Coalesce, OverlappingSameBox) {
  std::vector<AnomalyEvent> ev{{"v", 50, 100, {0, 0, 10, 10}, 0.6},
                               {"v", 10, 60, {1, 0, 10, 10}, 0.9},
                               {"v", 200, 300, {0, 0, 10, 10}, 0.5},
                               {"v", 20, 90, {50, 50, 10, 10}, 0.5}};
  const auto out = coalesce_events(ev, 0.5);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].start, 10);
  EXPECT_EQ(out[0].end, 100);
  EXPECT_EQ(out[0].confidence, 0.9);
  EXPECT_EQ(out[1].start, 20);
  EXPECT_EQ(out[2].start, 200);
}

// Random but structured instances: a few box "sites" recurring across
// windows with jitter, plus foreground runs near each site.
struct Instance {
  std::vector<WindowDetections> windows;
  std::vector<Detection> foreground;
  mask::Mask road;
};

Instance random_instance(Rng& rng) {
  Instance in;
  in.road = mask::Mask(100, 100);
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) in.road.set(x, y, y >= 20 && y < 80);
  }
  const int sites = 1 + static_cast<int>(rng.below(4));
  std::vector<BBox> base;
  for (int s = 0; s < sites; ++s) {
    base.push_back({static_cast<int>(rng.below(80)), static_cast<int>(rng.below(80)),
                    4 + static_cast<int>(rng.below(16)),
                    4 + static_cast<int>(rng.below(16))});
  }
  auto jitter = [&](BBox b) {
    b.x = std::clamp(b.x + static_cast<int>(rng.between(-2, 2)), 0, 99 - b.w);
    b.y = std::clamp(b.y + static_cast<int>(rng.between(-2, 2)), 0, 99 - b.h);
    return b;
  };
  for (int w = 0; w < 6; ++w) {
    WindowDetections wd{window_at(30.0 * w), {}};
    for (const BBox& b : base) {
      if (rng.below(3) != 0) wd.detections.push_back(det(jitter(b), rng.uniform(0.2, 1.0)));
    }
    in.windows.push_back(std::move(wd));
  }
  for (const BBox& b : base) {
    const std::int64_t first = static_cast<std::int64_t>(rng.below(1500));
    const std::int64_t len = static_cast<std::int64_t>(rng.below(400));
    for (std::int64_t f = first; f <= first + len; ++f) {
      if (rng.below(4) != 0) in.foreground.push_back(det(jitter(b), 1.0, f));
    }
  }
  return in;
}

TEST(Localize, TemporalSanity) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng);
    DecisionParams p;
    const auto loc = localize_anomalies("v", in.windows, in.road, in.foreground,
                                        p, 0.2, 10.0);
    std::int64_t lo = INT64_MAX;
    std::int64_t hi = INT64_MIN;
    for (const auto& prof : loc.profiles) {
      if (prof.empty()) continue;
      lo = std::min(lo, prof.first());
      hi = std::max(hi, prof.last());
    }
    for (const auto& e : loc.events) {
      ASSERT_GE(e.start, 0.0);
      ASSERT_LT(e.start, e.end);
      ASSERT_GE(e.start, lo / 10.0);
      ASSERT_LE(e.end, hi / 10.0);
    }
  }
}

TEST(Localize, ExtractionGatesAreMonotone) {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng);
    DecisionParams a;
    a.score_min = rng.uniform(0.0, 1.0);
    a.area_min = rng.uniform(0.0, 0.03);
    DecisionParams b = a;
    b.score_min = std::min(1.0, a.score_min + rng.uniform(0.0, 0.3));
    b.area_min = a.area_min + rng.uniform(0.0, 0.01);
    ASSERT_LE(extract_candidates(in.windows, in.road, b, 0.2).size(),
              extract_candidates(in.windows, in.road, a, 0.2).size());
  }
}

TEST(Localize, SupportGateIsMonotonePerCandidate) {
  Rng rng(14);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng);
    DecisionParams p;
    const auto cands = merge_candidates(
        extract_candidates(in.windows, in.road, p, 0.2), p.iou_merge);
    const double lo = rng.uniform(0.0, 1.0);
    const double hi = std::min(1.0, lo + rng.uniform(0.0, 0.5));
    for (const auto& c : cands) {
      const auto a = support_profile(c, in.foreground, lo);
      const auto b = support_profile(c, in.foreground, hi);
      ASSERT_TRUE(std::includes(a.supporting_frames.begin(), a.supporting_frames.end(),
                                b.supporting_frames.begin(), b.supporting_frames.end()));
    }
  }
}

}  // namespace
}  // namespace stallwatch::anomaly
