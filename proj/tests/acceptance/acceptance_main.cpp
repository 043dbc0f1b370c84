// Runs every acceptance criterion and prints one PASS/FAIL line for each.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "stallwatch/anomaly.hpp"
#include "stallwatch/background.hpp"
#include "stallwatch/config.hpp"
#include "stallwatch/error.hpp"
#include "stallwatch/hashing.hpp"
#include "stallwatch/media_io.hpp"
#include "stallwatch/pipeline.hpp"
#include "stallwatch/road_mask.hpp"
#include "stallwatch/scoring.hpp"
#include "stallwatch/synth.hpp"
#include "stallwatch/video_sorter.hpp"

namespace fs = std::filesystem;
using namespace stallwatch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr std::uint64_t kSeed = 7;

// --- 1 -------------------------------------------------------------------------

Outcome metric_reconstruction() {
  const double v = scoring::s4(0.8571, 101.0071);
  return {std::abs(v - 0.5686) <= 1e-3, fmt::format("s4(0.8571, 101.0071) = {:.6f}", v)};
}

// --- 2 -------------------------------------------------------------------------

fs::path standard_corpus() {
  const fs::path dir = fs::path(STALLWATCH_CACHE_DIR) / fmt::format("standard_seed{}", kSeed);
  const fs::path stamp = dir / "complete";
  if (!fs::exists(stamp)) {
    fs::remove_all(dir);
    synth::corpus(synth::Preset::kStandard, kSeed, dir);
    io::write_text(stamp, "ok\n");
  }
  return dir;
}

Outcome synthetic_end_to_end() {
  const fs::path input = standard_corpus();
  const fs::path out = fs::path(STALLWATCH_CACHE_DIR) / "standard_run";
  fs::remove_all(out);
  const auto start = std::chrono::steady_clock::now();
  const auto result = pipeline::run_all({input, out, std::nullopt, std::nullopt},
                                        pipeline::PipelineConfig{});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!result.score) return {false, "no ground truth found"};
  const auto& s = *result.score;
  std::size_t parked_predictions = 0;
  for (const auto& p : result.predictions) {
    if (p.video_id.find("parked") != std::string::npos) ++parked_predictions;
  }
  const bool pass = s.f1 == 1.0 && s.rmse <= 30.0 && parked_predictions == 0;
  return {pass, fmt::format("F1 {:.4f}, RMSE {:.2f} s, TP {} FP {} FN {}, "
                            "{} predictions on parked videos, run-all {:.1f} s",
                            s.f1, s.rmse, s.tp, s.fp, s.fn, parked_predictions,
                            seconds)};
}

// --- 3 -------------------------------------------------------------------------

Outcome background_oracle() {
  Rng rng(kSeed);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(8));
    const int h = 1 + static_cast<int>(rng.below(8));
    const int n = 1 + static_cast<int>(rng.below(25));
    std::vector<Frame> frames;
    for (int i = 0; i < n; ++i) {
      Frame f(w, h);
      for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
      frames.push_back(std::move(f));
    }
    const Frame got = background::median_frame(frames);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::vector<int> v;
        for (const auto& f : frames) v.push_back(f.at(x, y));
        std::sort(v.begin(), v.end());
        if (got.at(x, y) != v[(v.size() - 1) / 2]) ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt::format("100 cases, {} pixel mismatches", mismatches)};
}

// --- 4 -------------------------------------------------------------------------

synth::SceneSpec short_scene(const std::string& id) {
  for (auto s : synth::preset_scenes(synth::Preset::kStandard, kSeed)) {
    if (s.video_id != id) continue;
    s.duration_s = 40.0;
    s.vehicles.erase(std::remove_if(s.vehicles.begin(), s.vehicles.end(),
                                    [](const auto& v) { return v.stall.has_value(); }),
                     s.vehicles.end());
    return s;
  }
  throw Error(ErrorCode::kInvalidParam, id);
}

Outcome sorting_fidelity() {
  using sorting::LightingClass;
  int lighting_ok = 0;
  std::string detail;
  const std::pair<const char*, LightingClass> lighting_cases[] = {
      {"night_freeway_parked", LightingClass::kNight},
      {"day_freeway_clear", LightingClass::kDay},
      {"snow_freeway_parked", LightingClass::kSnow}};
  for (const auto& [id, expected] : lighting_cases) {
    const auto spec = short_scene(id);
    const synth::Renderer r(spec);
    std::vector<Frame> frames;
    for (std::int64_t i = 0; i < spec.frame_count(); i += 10) frames.push_back(r.render(i));
    const auto got = sorting::classify_lighting(sorting::average_histogram(frames));
    if (got == expected) ++lighting_ok;
    detail += fmt::format("{}->{} ", id, sorting::to_string(got));
  }
  sorting::DirectionParams dp;
  dp.gate_px = 0.1 * 320;
  const auto freeway = sorting::classify_road_type(sorting::estimate_directions(
      synth::oracle_detections(short_scene("day_freeway_clear")), dp));
  const auto crossing = sorting::classify_road_type(sorting::estimate_directions(
      synth::oracle_detections(short_scene("day_intersection_clear")), dp));
  const bool roads_ok = freeway == sorting::RoadType::kFreeway &&
                        crossing == sorting::RoadType::kIntersection;
  detail += fmt::format("| lighting {}/3, 2-direction->{}, 4-direction->{}", lighting_ok,
                        sorting::to_string(freeway), sorting::to_string(crossing));
  return {lighting_ok == 3 && roads_ok, detail};
}

// --- 5 -------------------------------------------------------------------------

Outcome mask_calibration() {
  using sorting::LightingClass;
  std::vector<double> grid;
  for (int i = 0; i <= 75; ++i) grid.push_back(0.25 + 0.05 * i);
  const sorting::MaskConstantTable shipped;
  bool pass = true;
  std::string detail;
  for (auto l : {LightingClass::kDay, LightingClass::kNight, LightingClass::kSnow}) {
    const auto spec = synth::calibration_scene(l, kSeed);
    const synth::Renderer r(spec);
    std::vector<Frame> frames;
    for (std::int64_t i = 0; i < spec.frame_count(); ++i) frames.push_back(r.render(i));
    const Frame bg = background::median_frame(frames);
    const auto bits = synth::road_truth(spec);
    mask::Mask truth(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) truth.set(x, y, bits[y * spec.width + x] != 0);
    }
    const auto cells = mask::calibrate(bg, truth, grid, grid,
                                       mask::full_frame_block(spec.width, spec.height));
    const auto passing = std::count_if(cells.begin(), cells.end(),
                                       [](const auto& c) { return c.passes(0.95, 0.05); });
    const auto* best = mask::pick_calibration(cells, 0.95, 0.05);
    const auto& k = shipped[l];
    const bool matches = best != nullptr && std::abs(best->k1 - k.k1) < 1e-9 &&
                         std::abs(best->k2 - k.k2) < 1e-9;
    pass = pass && matches;
    if (best == nullptr) {
      detail += fmt::format("{}: no passing cell; ", sorting::to_string(l));
    } else {
      detail += fmt::format("{}: {} passing, chose ({:.2f},{:.2f}) recall {:.3f} fp {:.3f}{}; ",
                            sorting::to_string(l), passing, best->k1, best->k2,
                            best->recall, best->false_positive,
                            matches ? "" : " != shipped");
    }
  }
  return {pass, detail};
}

// --- 6 -------------------------------------------------------------------------

BBox random_box(Rng& rng, int extent) {
  return {static_cast<int>(rng.below(extent)), static_cast<int>(rng.below(extent)),
          1 + static_cast<int>(rng.below(extent)), 1 + static_cast<int>(rng.below(extent))};
}

int iou_properties() {
  Rng rng(kSeed);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const BBox a = random_box(rng, 100);
    const BBox b = random_box(rng, 100);
    const double v = anomaly::iou(a, b);
    if (v != anomaly::iou(b, a) || v < 0.0 || v > 1.0 || anomaly::iou(a, a) != 1.0) {
      ++failures;
    }
  }
  return failures;
}

struct GateInstance {
  std::vector<anomaly::WindowDetections> windows;
  std::vector<Detection> foreground;
  mask::Mask road;
};

GateInstance random_gate_instance(Rng& rng) {
  GateInstance in;
  in.road = mask::Mask(100, 100);
  for (int y = 20; y < 80; ++y) {
    for (int x = 0; x < 100; ++x) in.road.set(x, y, true);
  }
  std::vector<BBox> sites;
  const int n = 1 + static_cast<int>(rng.below(4));
  for (int s = 0; s < n; ++s) {
    sites.push_back({static_cast<int>(rng.below(80)), static_cast<int>(rng.below(80)),
                     4 + static_cast<int>(rng.below(16)), 4 + static_cast<int>(rng.below(16))});
  }
  auto jitter = [&](BBox b) {
    b.x = std::clamp(b.x + static_cast<int>(rng.between(-3, 3)), 0, 99 - b.w);
    b.y = std::clamp(b.y + static_cast<int>(rng.between(-3, 3)), 0, 99 - b.h);
    return b;
  };
  for (int w = 0; w < 6; ++w) {
    anomaly::WindowDetections wd;
    wd.window.start_s = 30.0 * w;
    wd.window.end_s = 30.0 * (w + 1);
    wd.window.first_frame = 300 * w;
    wd.window.end_frame = 300 * (w + 1);
    for (const BBox& b : sites) {
      if (rng.below(3) != 0) {
        wd.detections.push_back({wd.window.first_frame, "car", rng.uniform(0.2, 1.0), jitter(b)});
      }
    }
    in.windows.push_back(std::move(wd));
  }
  for (const BBox& b : sites) {
    const auto first = static_cast<std::int64_t>(rng.below(1500));
    const auto len = static_cast<std::int64_t>(rng.below(400));
    for (std::int64_t f = first; f <= first + len; ++f) {
      if (rng.below(4) != 0) in.foreground.push_back({f, "car", 1.0, jitter(b)});
    }
  }
  return in;
}

// Counts, per gate, the sweep steps in which raising that gate increased the
// number of accepted events.
std::array<int, 3> gate_monotonicity(int* steps) {
  Rng rng(kSeed + 1);
  std::array<int, 3> violations{};
  *steps = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const GateInstance in = random_gate_instance(rng);
    for (int gate = 0; gate < 3; ++gate) {
      anomaly::DecisionParams p;
      p.min_support_frames = 10;
      std::size_t previous = SIZE_MAX;
      for (int step = 0; step <= 10; ++step) {
        const double t = step / 10.0;
        if (gate == 0) p.score_min = t;
        if (gate == 1) p.area_min = 0.005 * t;
        if (gate == 2) p.iou_support = t;
        const auto events = anomaly::localize_anomalies(
            "v", in.windows, in.road, in.foreground, p, 0.2, 10.0).events;
        if (events.size() > previous) ++violations[gate];
        previous = events.size();
        ++*steps;
      }
    }
  }
  return violations;
}

int round_trips() {
  Rng rng(kSeed + 2);
  int failures = 0;
  auto check = [&](bool ok) { failures += ok ? 0 : 1; };
  for (int trial = 0; trial < 200; ++trial) {
    Frame f(1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
    for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
    check(io::parse_pgm(io::encode_pgm(f)) == f);

    std::vector<Detection> dets;
    std::vector<GroundTruthEntry> gts;
    std::vector<Prediction> preds;
    const int n = static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) {
      const std::string id = fmt::format("v{}", rng.below(1000));
      dets.push_back({static_cast<std::int64_t>(rng.below(100000)),
                      rng.below(2) ? "car" : "truck", rng.uniform(), random_box(rng, 400)});
      const double s = rng.uniform(0, 1000);
      gts.push_back({id, s, s + rng.uniform(0.001, 500)});
      preds.push_back({id, s, s + rng.uniform(0.001, 500), rng.uniform()});
    }
    std::string jsonl;
    for (const auto& d : dets) jsonl += io::format_detection(d) + "\n";
    check(io::parse_detections(jsonl) == dets);
    check(io::parse_ground_truth(io::format_ground_truth(gts)) == gts);
    check(io::parse_predictions(io::format_predictions(preds)) == preds);

    sorting::VideoCategory c;
    c.video_id = fmt::format("v{}", trial);
    c.lighting = static_cast<sorting::LightingClass>(rng.below(3));
    c.road_type = rng.below(2) ? sorting::RoadType::kFreeway : sorting::RoadType::kIntersection;
    c.background_window_s = rng.uniform(1, 600);
    c.k1 = rng.uniform(0.1, 4);
    c.k2 = rng.uniform(0.1, 4);
    check(sorting::category_from_json(sorting::category_to_json(c)) == c);

    pipeline::PipelineConfig cfg;
    cfg.seed = rng.next();
    cfg.decision.score_min = rng.uniform();
    cfg.min_overlap = rng.uniform(0.01, 1.0);
    cfg.sorting.mask_constants.snow = {rng.uniform(0.1, 4), rng.uniform(0.1, 4)};
    const std::string text = pipeline::config_to_json(cfg);
    check(pipeline::config_to_json(pipeline::config_from_json(text)) == text);
  }
  for (const auto& s : synth::preset_scenes(synth::Preset::kStandard, kSeed)) {
    check(synth::scene_to_json(synth::scene_from_json(synth::scene_to_json(s))) ==
          synth::scene_to_json(s));
  }
  return failures;
}

bool deterministic_runs() {
  const fs::path root = fs::path(STALLWATCH_CACHE_DIR) / "determinism";
  fs::remove_all(root);
  synth::corpus(synth::Preset::kSmoke, kSeed, root / "corpus");
  pipeline::PipelineConfig cfg;
  cfg.window_override_s = 10.0;
  pipeline::run_all({root / "corpus", root / "a", std::nullopt, std::nullopt}, cfg);
  pipeline::run_all({root / "corpus", root / "b", std::nullopt, std::nullopt}, cfg);
  const bool same = io::read_bytes(root / "a" / "predictions.csv") ==
                    io::read_bytes(root / "b" / "predictions.csv");
  fs::remove_all(root);
  return same;
}

Outcome property_suites() {
  const int iou_failures = iou_properties();
  int steps = 0;
  const auto gates = gate_monotonicity(&steps);
  const int gate_violations = gates[0] + gates[1] + gates[2];
  const int rt_failures = round_trips();
  const bool deterministic = deterministic_runs();
  return {iou_failures == 0 && gate_violations == 0 && rt_failures == 0 && deterministic,
          fmt::format("iou failures {}/10000, gate violations in {} steps "
                      "(score_min {}, area_min {}, iou_support {}), "
                      "round-trip failures {}, deterministic {}",
                      iou_failures, steps, gates[0], gates[1], gates[2], rt_failures,
                      deterministic)};
}

// --- 7 -------------------------------------------------------------------------

struct Assignment {
  int tp = 0;
  double sse = 0.0;
};

// Best partial assignment: most pairs, then least squared start error.
Assignment exhaustive(const std::vector<double>& preds, const std::vector<double>& gts,
                      double window) {
  Assignment best;
  std::vector<bool> used(gts.size(), false);
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int tp, double sse) {
    if (i == preds.size()) {
      if (tp > best.tp || (tp == best.tp && sse < best.sse - 1e-12)) best = {tp, sse};
      return;
    }
    rec(i + 1, tp, sse);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double e = std::abs(preds[i] - gts[j]);
      if (used[j] || e > window) continue;
      used[j] = true;
      rec(i + 1, tp + 1, sse + e * e);
      used[j] = false;
    }
  };
  rec(0, 0, 0.0);
  return best;
}

Outcome matcher_oracle() {
  Rng rng(kSeed + 3);
  int tp_mismatch = 0;
  int sse_mismatch = 0;
  std::string example;
  for (int trial = 0; trial < 1000; ++trial) {
    const int np = static_cast<int>(rng.below(5));
    const int ng = static_cast<int>(rng.below(5));
    std::vector<double> ps;
    std::vector<double> gs;
    std::vector<Prediction> preds;
    std::vector<GroundTruthEntry> gts;
    for (int i = 0; i < np; ++i) {
      ps.push_back(rng.uniform(0, 60));
      preds.push_back({"v", ps.back(), ps.back() + 30, 0.5});
    }
    while (static_cast<int>(gs.size()) < ng) {
      const double s = rng.uniform(0, 60);
      gs.push_back(s);
      gts.push_back({"v", s, s + 30});
    }
    const auto m = scoring::match(preds, gts, 10.0);
    double sse = 0.0;
    for (const auto& tp : m.true_positives) sse += tp.start_error * tp.start_error;
    const Assignment opt = exhaustive(ps, gs, 10.0);
    if (m.tp() != opt.tp) {
      ++tp_mismatch;
      if (example.empty()) {
        example = fmt::format("; e.g. preds [{:.1f}] gts [{:.1f}]: greedy {} pairs, optimum {}",
                              fmt::join(ps, ", "), fmt::join(gs, ", "), m.tp(), opt.tp);
      }
    } else if (std::abs(sse - opt.sse) > 1e-9) {
      ++sse_mismatch;
    }
  }
  return {tp_mismatch == 0 && sse_mismatch == 0,
          fmt::format("1000 cases: {} with fewer pairs than the optimum, {} with equal "
                      "pairs but larger squared error{}",
                      tp_mismatch, sse_mismatch, example)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(STALLWATCH_CACHE_DIR);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 metric reconstruction", metric_reconstruction},
      {"2 synthetic end-to-end", synthetic_end_to_end},
      {"3 background oracle equivalence", background_oracle},
      {"4 sorting fidelity", sorting_fidelity},
      {"5 mask calibration", mask_calibration},
      {"6 property suites", property_suites},
      {"7 scoring matcher oracle", matcher_oracle},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
