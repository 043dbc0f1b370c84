#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "stallwatch/hashing.hpp"
#include "stallwatch/synth.hpp"
#include "stallwatch/video_sorter.hpp"
#include "test_support.hpp"

namespace stallwatch::sorting {
namespace {

using stallwatch::testing::TempDir;

Histogram spikes(std::initializer_list<std::pair<int, double>> entries) {
  Histogram h{};
  for (auto [bin, mass] : entries) h[bin] = mass;
  return h;
}

TEST(Histogram, ConstantFrames) {
  const std::vector<Frame> frames{Frame(4, 4, 30), Frame(4, 4, 30)};
  const Histogram h = average_histogram(frames);
  EXPECT_DOUBLE_EQ(h[30], 1.0);
  double rest = 0.0;
  for (int b = 0; b < 256; ++b) {
    if (b != 30) rest += h[b];
  }
  EXPECT_EQ(rest, 0.0);
}

TEST(Histogram, TwoValueFrame) {
  std::vector<std::uint8_t> px(8, 10);
  std::fill(px.begin() + 4, px.end(), 200);
  const std::vector<Frame> frames{Frame(4, 2, px)};
  const Histogram h = average_histogram(frames);
  EXPECT_DOUBLE_EQ(h[10], 0.5);
  EXPECT_DOUBLE_EQ(h[200], 0.5);
}

TEST(Histogram, AverageOfOneHots) {
  const std::vector<Frame> frames{Frame(3, 3, 0), Frame(3, 3, 255)};
  const Histogram h = average_histogram(frames);
  EXPECT_DOUBLE_EQ(h[0], 0.5);
  EXPECT_DOUBLE_EQ(h[255], 0.5);
}

TEST(Histogram, EmptyInput) {
  EXPECT_ERROR_CODE(average_histogram(std::span<const Frame>{}),
                    ErrorCode::kEmptyInput);
}

TEST(Peaks, DeltaDistribution) {
  const auto peaks = find_peaks(spikes({{30, 1.0}}), 0, 0.005);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].bin, 30);
  EXPECT_NEAR(peaks[0].mass, 1.0, 1e-12);
}

TEST(Peaks, TwoEqualSpikes) {
  const auto peaks = find_peaks(spikes({{105, 0.5}, {145, 0.5}}), 2, 0.01);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_EQ(peaks[0].bin, 105);
  EXPECT_EQ(peaks[1].bin, 145);
}

TEST(Peaks, UniformHasNone) {
  Histogram h;
  h.fill(1.0 / 256.0);
  EXPECT_TRUE(find_peaks(h, 5, 0.01).empty());
}

TEST(Lighting, PaperSignatures) {
  EXPECT_EQ(classify_lighting(spikes({{30, 1.0}})), LightingClass::kNight);
  EXPECT_EQ(classify_lighting(spikes({{105, 0.5}, {145, 0.5}})), LightingClass::kDay);
  EXPECT_EQ(classify_lighting(spikes({{210, 0.5}, {240, 0.5}})), LightingClass::kSnow);
}

TEST(Lighting, UnresolvedDefaultsToDay) {
  EXPECT_EQ(classify_lighting(spikes({{180, 1.0}})), LightingClass::kDay);
  Histogram flat;
  flat.fill(1.0 / 256.0);
  EXPECT_EQ(classify_lighting(flat), LightingClass::kDay);
}

TEST(Lighting, ScaleInvariant) {
  // Scaling every frame's pixel count leaves the normalised histogram, and so
  // the class, unchanged.
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int v1 = static_cast<int>(rng.below(256));
    const int v2 = static_cast<int>(rng.below(256));
    std::vector<std::uint8_t> small{static_cast<std::uint8_t>(v1),
                                    static_cast<std::uint8_t>(v2)};
    std::vector<std::uint8_t> big;
    for (int k = 0; k < 50; ++k) big.insert(big.end(), small.begin(), small.end());
    const std::vector<Frame> a{Frame(2, 1, small)};
    const std::vector<Frame> b{Frame(10, 10, big)};
    EXPECT_EQ(classify_lighting(average_histogram(a)),
              classify_lighting(average_histogram(b)));
  }
}

TEST(Directions, BinsCentredOnAxes) {
  EXPECT_EQ(direction_bin(1, 0), 0);
  EXPECT_EQ(direction_bin(1, 1), 1);
  EXPECT_EQ(direction_bin(0, 1), 2);
  EXPECT_EQ(direction_bin(-1, 0), 4);
  EXPECT_EQ(direction_bin(0, -1), 6);
  EXPECT_EQ(direction_bin(1, -0.1), 0);
}

TEST(Directions, OpposingAndFourFlows) {
  std::vector<std::array<double, 2>> two{{3, 0}, {-3, 0}, {4, 0.2}, {-5, 0}};
  EXPECT_EQ(count_directions(two, 0.05), 2);
  std::vector<std::array<double, 2>> four{{3, 0}, {-3, 0}, {0, 3}, {0, -3}};
  EXPECT_EQ(count_directions(four, 0.05), 4);
}

TEST(Directions, StationaryObjectHasNone) {
  std::vector<Detection> track;
  for (int f = 0; f < 50; ++f) {
    track.push_back({f, "car", 1.0, {100 + (f % 2), 50, 20, 10}});
  }
  EXPECT_EQ(estimate_directions(track, {32.0, 2.0, 0.05}), 0);
}

TEST(Directions, TracksFromDetections) {
  std::vector<Detection> ds;
  for (int f = 0; f < 40; ++f) {
    ds.push_back({f, "car", 1.0, {10 + 4 * f, 20, 20, 10}});
    ds.push_back({f, "car", 1.0, {250 - 4 * f, 80, 20, 10}});
  }
  EXPECT_EQ(estimate_directions(ds, {32.0, 2.0, 0.05}), 2);
  const std::vector<Detection> one_frame{{0, "car", 1.0, {0, 0, 5, 5}}};
  EXPECT_ERROR_CODE(estimate_directions(one_frame, {32.0, 2.0, 0.05}),
                    ErrorCode::kInsufficientData);
}

TEST(Directions, RotationByEighthTurnPreservesCount) {
  Rng rng(9);
  const double eighth = std::numbers::pi / 4.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::array<double, 2>> vs;
    std::vector<std::array<double, 2>> rotated;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      // Keep clear of bin edges so rounding cannot move a vector across one.
      const int bin = static_cast<int>(rng.below(8));
      const double angle = bin * eighth + rng.uniform(-0.35, 0.35);
      const double r = rng.uniform(2.0, 20.0);
      vs.push_back({r * std::cos(angle), r * std::sin(angle)});
      rotated.push_back({r * std::cos(angle + eighth), r * std::sin(angle + eighth)});
    }
    ASSERT_EQ(count_directions(vs, 0.05), count_directions(rotated, 0.05));
  }
}

TEST(RoadType, ThresholdAtTwo) {
  EXPECT_EQ(classify_road_type(0), RoadType::kFreeway);
  EXPECT_EQ(classify_road_type(2), RoadType::kFreeway);
  EXPECT_EQ(classify_road_type(3), RoadType::kIntersection);
  EXPECT_EQ(classify_road_type(4), RoadType::kIntersection);
}

TEST(Window, CategoryRule) {
  EXPECT_EQ(background_window_for(LightingClass::kDay, RoadType::kFreeway), 30.0);
  EXPECT_EQ(background_window_for(LightingClass::kNight, RoadType::kFreeway), 300.0);
  EXPECT_EQ(background_window_for(LightingClass::kSnow, RoadType::kFreeway), 300.0);
  EXPECT_EQ(background_window_for(LightingClass::kDay, RoadType::kIntersection), 300.0);
}

TEST(Category, JsonRoundTrip) {
  const VideoCategory c{"v", LightingClass::kSnow, RoadType::kIntersection, 300.0,
                        3.1, 0.4};
  EXPECT_EQ(category_from_json(category_to_json(c)), c);
}

TEST(SortVideo, SyntheticScenesClassifyAsGenerated) {
  TempDir dir;
  for (auto scene : synth::preset_scenes(synth::Preset::kStandard, 3)) {
    if (scene.video_id != "night_freeway_parked" &&
        scene.video_id != "snow_intersection_clear" &&
        scene.video_id != "day_freeway_clear") {
      continue;
    }
    scene.duration_s = 40.0;
    scene.vehicles.erase(
        std::remove_if(scene.vehicles.begin(), scene.vehicles.end(),
                       [](const auto& v) { return v.stall.has_value(); }),
        scene.vehicles.end());
    const auto out = dir / scene.video_id;
    synth::generate(scene, out);
    const auto seq = io::FrameSequence::open(out);
    const auto ds = io::read_detections(out / "detections.jsonl");
    const VideoCategory c = sort_video(seq, ds, SortParams{});
    EXPECT_EQ(c.lighting, scene.lighting) << scene.video_id;
    const bool crossing = scene.video_id.find("intersection") != std::string::npos;
    EXPECT_EQ(c.road_type, crossing ? RoadType::kIntersection : RoadType::kFreeway)
        << scene.video_id;
    EXPECT_EQ(sort_video(seq, ds, SortParams{}), c);
  }
}

}  // namespace
}  // namespace stallwatch::sorting
