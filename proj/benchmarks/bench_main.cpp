#include <vector>

#include <benchmark/benchmark.h>

#include "stallwatch/anomaly.hpp"
#include "stallwatch/background.hpp"
#include "stallwatch/hashing.hpp"
#include "stallwatch/road_mask.hpp"
#include "stallwatch/video_sorter.hpp"

using namespace stallwatch;

namespace {

Frame noise_frame(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(256));
  return Frame(w, h, std::move(px));
}

std::vector<Frame> noise_frames(int n, int w, int h) {
  std::vector<Frame> out;
  for (int i = 0; i < n; ++i) out.push_back(noise_frame(w, h, i + 1));
  return out;
}

void BM_MedianFrame(benchmark::State& state) {
  const auto frames = noise_frames(static_cast<int>(state.range(0)), 320, 240);
  for (auto _ : state) {
    benchmark::DoNotOptimize(background::median_frame(frames));
  }
  state.SetItemsProcessed(state.iterations() * 320 * 240);
}
BENCHMARK(BM_MedianFrame)->Arg(30)->Arg(300);

void BM_LocalStats(benchmark::State& state) {
  const Frame f = noise_frame(320, 240, 7);
  const int block = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mask::local_stats(f, block));
  }
}
BENCHMARK(BM_LocalStats)->Arg(31)->Arg(239);

void BM_RoadMask(benchmark::State& state) {
  const Frame f = noise_frame(320, 240, 9);
  mask::MaskParams params{2.0, 1.0, mask::full_frame_block(320, 240)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mask::adaptive_road_mask(f, params));
  }
}
BENCHMARK(BM_RoadMask);

void BM_Histogram(benchmark::State& state) {
  const Frame f = noise_frame(320, 240, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sorting::frame_histogram(f));
  }
}
BENCHMARK(BM_Histogram);

void BM_Iou(benchmark::State& state) {
  Rng rng(3);
  std::vector<BBox> boxes;
  for (int i = 0; i < 1024; ++i) {
    boxes.push_back({static_cast<int>(rng.below(300)), static_cast<int>(rng.below(220)),
                     1 + static_cast<int>(rng.below(40)),
                     1 + static_cast<int>(rng.below(40))});
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(anomaly::iou(boxes[i & 1023], boxes[(i * 7 + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_SupportProfile(benchmark::State& state) {
  // One detection per frame for a 15-minute 10 fps video.
  std::vector<Detection> fg;
  for (std::int64_t f = 0; f < 9000; ++f) {
    fg.push_back({f, "car", 1.0, {static_cast<int>(f % 300), 100, 24, 12}});
  }
  anomaly::Candidate cand;
  cand.bbox = {150, 100, 24, 12};
  for (auto _ : state) {
    benchmark::DoNotOptimize(anomaly::support_profile(cand, fg, 0.3));
  }
}
BENCHMARK(BM_SupportProfile);

}  // namespace
BENCHMARK_MAIN();
