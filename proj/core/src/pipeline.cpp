#include "stallwatch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "stallwatch/hashing.hpp"

#ifndef STALLWATCH_VERSION
#define STALLWATCH_VERSION "unknown"
#endif

namespace stallwatch::pipeline {

namespace {

using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename F>
auto in_stage(std::string_view stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(stage), e);
  }
}

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// failure in index order is rethrown once all workers have stopped.
template <typename F>
void parallel_for(std::size_t count, int jobs, F&& body) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Creates the detector on first use so that stages reading persisted
// detections never launch an external process.
class LazyDetector {
 public:
  explicit LazyDetector(detect::DetectorSpec spec) : spec_(std::move(spec)) {}

  detect::Detector& get() {
    if (!detector_) detector_ = detect::make_detector(spec_);
    return *detector_;
  }

 private:
  detect::DetectorSpec spec_;
  std::unique_ptr<detect::Detector> detector_;
};

std::vector<std::array<std::int64_t, 2>> runs(
    const std::vector<std::int64_t>& frames) {
  std::vector<std::array<std::int64_t, 2>> out;
  for (std::int64_t f : frames) {
    if (!out.empty() && out.back()[1] + 1 == f) {
      out.back()[1] = f;
    } else {
      out.push_back({f, f});
    }
  }
  return out;
}

ojson bbox_json(const BBox& b) { return ojson::array({b.x, b.y, b.w, b.h}); }

void write_events(const std::string& video_id,
                  const anomaly::Localization& loc, const fs::path& path) {
  ojson j;
  j["video_id"] = video_id;
  j["candidates"] = ojson::array();
  for (std::size_t i = 0; i < loc.candidates.size(); ++i) {
    const auto& c = loc.candidates[i];
    const auto& p = loc.profiles[i];
    ojson row;
    row["bbox"] = bbox_json(c.bbox);
    row["score"] = c.score;
    row["first_seen"] = c.first_seen;
    row["windows_seen"] = c.windows_seen;
    row["support_frames"] = p.supporting_frames.size();
    row["support_density"] = p.density();
    row["support_runs"] = runs(p.supporting_frames);
    j["candidates"].push_back(std::move(row));
  }
  j["events"] = ojson::array();
  for (const auto& e : loc.events) {
    ojson row;
    row["start"] = e.start;
    row["end"] = e.end;
    row["confidence"] = e.confidence;
    row["bbox"] = bbox_json(e.bbox);
    j["events"].push_back(std::move(row));
  }
  io::write_text(path, j.dump(2) + "\n");
}

std::vector<Prediction> to_predictions(const std::vector<AnomalyEvent>& events) {
  std::vector<Prediction> out;
  for (const auto& e : events) out.push_back(e.as_prediction());
  return out;
}

void sort_predictions(std::vector<Prediction>& predictions) {
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const Prediction& a, const Prediction& b) {
                     return std::tie(a.video_id, a.start, a.end) <
                            std::tie(b.video_id, b.start, b.end);
                   });
}

fs::path window_file(const fs::path& dir, const background::Window& w,
                     std::string_view suffix) {
  return dir / fmt::format("bg_{}{}", w.start_ms(), suffix);
}

void hash_file_if_present(Fnv1a& h, const fs::path& path) {
  if (!fs::exists(path)) return;
  h.update(path.filename().string());
  h.update(io::read_bytes(path));
}

// Content hash of everything the run read for one video.
std::string inputs_hash(const io::FrameSequence& seq,
                        std::span<const background::BackgroundFrame> bgs,
                        std::int64_t histogram_stride) {
  Fnv1a h;
  const fs::path& dir = seq.directory();
  hash_file_if_present(h, dir / "meta.json");
  hash_file_if_present(h, dir / "detections.jsonl");
  hash_file_if_present(h, dir / "scene.json");
  std::vector<std::int64_t> frames;
  for (std::int64_t i = 0; i < seq.frame_count(); i += histogram_stride) {
    frames.push_back(i);
  }
  for (const auto& bg : bgs) {
    frames.insert(frames.end(), bg.sampled_indices.begin(),
                  bg.sampled_indices.end());
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  for (std::int64_t i : frames) {
    h.update_u64(static_cast<std::uint64_t>(i));
    h.update(io::read_bytes(seq.frame_path(i)));
  }
  return h.hex();
}

}  // namespace

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), fmt::format("stage '{}': {}", stage, cause.what()),
            Verbatim{}),
      stage_(std::move(stage)) {}

std::vector<fs::path> discover_videos(const fs::path& input) {
  if (!fs::exists(input)) {
    throw Error(ErrorCode::kMissingMetadata,
                fmt::format("input '{}' does not exist", input.string()));
  }
  if (fs::exists(input / "meta.json")) return {input};
  std::vector<fs::path> videos;
  if (fs::exists(input / "corpus.json")) {
    const auto j = nlohmann::json::parse(io::read_text(input / "corpus.json"),
                                         nullptr, false);
    if (!j.is_object() || !j.contains("videos") || !j["videos"].is_array()) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("'{}' has no video list",
                              (input / "corpus.json").string()));
    }
    for (const auto& v : j["videos"]) {
      if (!v.is_string()) {
        throw Error(ErrorCode::kParseError, "corpus.json video ids must be strings");
      }
      videos.push_back(input / v.get<std::string>());
    }
  } else {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
        videos.push_back(entry.path());
      }
    }
    std::sort(videos.begin(), videos.end());
  }
  if (videos.empty()) {
    throw Error(ErrorCode::kMissingMetadata,
                fmt::format("no videos found under '{}'", input.string()));
  }
  return videos;
}

VideoPaths video_paths(const fs::path& out_dir, const std::string& video_id) {
  return {out_dir / "videos" / video_id};
}

std::string mask_file_name(const background::Window& window) {
  return fmt::format("mask_{}.pgm", window.start_ms());
}

std::vector<Detection> load_foreground(
    const io::FrameSequence& seq, detect::Detector& detector,
    const std::vector<std::string>& vehicle_classes) {
  const fs::path path = seq.directory() / "detections.jsonl";
  std::vector<Detection> out;
  if (fs::exists(path)) {
    for (Detection& d : io::read_detections(path)) {
      if (vehicle_classes.empty() ||
          std::find(vehicle_classes.begin(), vehicle_classes.end(),
                    d.class_label) != vehicle_classes.end()) {
        out.push_back(std::move(d));
      }
    }
    return out;
  }
  for (std::int64_t i = 0; i < seq.frame_count(); ++i) {
    detect::ImageRef ref;
    ref.path = seq.frame_path(i);
    ref.frame_index = i;
    auto found = detector.detect(ref);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

detect::DetectorSpec detector_spec_for(const detect::DetectorSpec& spec,
                                       const fs::path& video_dir) {
  detect::DetectorSpec out = spec;
  const std::string placeholder = "{video_dir}";
  for (auto pos = out.command.find(placeholder); pos != std::string::npos;
       pos = out.command.find(placeholder, pos)) {
    out.command.replace(pos, placeholder.size(), video_dir.string());
    pos += video_dir.string().size();
  }
  auto resolve = [&](const fs::path& p, const char* fallback) {
    if (p.empty()) return video_dir / fallback;
    return p.is_absolute() ? p : video_dir / p;
  };
  if (spec.kind == detect::DetectorKind::kOracleSynthetic) {
    out.scene = resolve(spec.scene, "scene.json");
  } else if (spec.kind == detect::DetectorKind::kPrecomputedFiles) {
    out.directory = resolve(spec.directory, "detections");
  }
  return out;
}

sorting::VideoCategory run_sort(const io::FrameSequence& seq,
                                std::span<const Detection> foreground,
                                const PipelineConfig& config,
                                const VideoPaths& paths) {
  sorting::VideoCategory category =
      sorting::sort_video(seq, foreground, config.sorting);
  fs::create_directories(paths.root);
  io::write_text(paths.category(), sorting::category_to_json(category));
  return category;
}

std::vector<background::BackgroundFrame> run_background(
    const io::FrameSequence& seq, const sorting::VideoCategory& category,
    const PipelineConfig& config, const VideoPaths& paths) {
  const double window = config.window_override_s > 0.0
                            ? config.window_override_s
                            : category.background_window_s;
  auto backgrounds = background::background_stream(
      seq, window, config.sample_fraction, config.seed);
  if (fs::exists(paths.backgrounds())) fs::remove_all(paths.backgrounds());
  background::write_backgrounds(seq.video_id(), backgrounds, paths.backgrounds());
  return backgrounds;
}

mask::Mask run_mask(const std::string& video_id,
                    std::span<const background::BackgroundFrame> backgrounds,
                    const sorting::VideoCategory& category,
                    const PipelineConfig& config, const VideoPaths& paths,
                    const std::optional<fs::path>& mask_out) {
  if (fs::exists(paths.masks())) fs::remove_all(paths.masks());
  fs::create_directories(paths.masks());
  std::vector<mask::Mask> masks;
  for (const auto& bg : backgrounds) {
    masks.push_back(anomaly::window_mask(bg.frame, category.k1, category.k2,
                                         config.mask_block));
    io::write_frame(masks.back().to_frame(),
                    paths.masks() / mask_file_name(bg.window));
  }
  mask::Mask road = mask::mask_union(masks);
  io::write_frame(road.to_frame(), paths.road_mask());
  if (mask_out) {
    const fs::path dir = *mask_out / video_id;
    fs::create_directories(dir);
    for (const auto& entry : fs::directory_iterator(paths.masks())) {
      fs::copy_file(entry.path(), dir / entry.path().filename(),
                    fs::copy_options::overwrite_existing);
    }
    fs::copy_file(paths.road_mask(), dir / "road_mask.pgm",
                  fs::copy_options::overwrite_existing);
  }
  return road;
}

anomaly::Localization run_detect(
    const io::FrameSequence& seq,
    std::span<const background::BackgroundFrame> backgrounds,
    const mask::Mask& road, std::span<const Detection> foreground,
    detect::Detector& detector, const PipelineConfig& config,
    const VideoPaths& paths) {
  auto windows =
      anomaly::detect_backgrounds(backgrounds, paths.backgrounds(), detector);
  for (const auto& w : windows) {
    io::write_detections(w.detections,
                         window_file(paths.backgrounds(), w.window, ".det.jsonl"));
  }
  anomaly::Localization loc = anomaly::localize_anomalies(
      seq.video_id(), windows, road, foreground, config.decision_for(seq.fps()),
      config.min_overlap, seq.fps());
  write_events(seq.video_id(), loc, paths.events());
  io::write_predictions(to_predictions(loc.events), paths.predictions());
  return loc;
}

sorting::VideoCategory load_category(const VideoPaths& paths) {
  if (!fs::exists(paths.category())) {
    throw Error(ErrorCode::kMissingMetadata,
                fmt::format("'{}' not found; run the sort stage first",
                            paths.category().string()));
  }
  return sorting::category_from_json(io::read_text(paths.category()));
}

mask::Mask load_road_mask(const VideoPaths& paths) {
  if (!fs::exists(paths.road_mask())) {
    throw Error(ErrorCode::kMissingMetadata,
                fmt::format("'{}' not found; run the mask stage first",
                            paths.road_mask().string()));
  }
  return mask::Mask::from_frame(io::read_frame(paths.road_mask()));
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kSort: return "sort";
    case Stage::kBackground: return "background";
    case Stage::kMask: return "mask";
    case Stage::kDetect: break;
  }
  return "detect";
}

void run_stage(Stage stage, const StageOptions& options,
               const PipelineConfig& config) {
  const auto videos =
      in_stage(to_string(stage), [&] { return discover_videos(options.input); });
  std::vector<std::vector<Prediction>> predictions(videos.size());
  parallel_for(videos.size(), config.jobs, [&](std::size_t i) {
    in_stage(to_string(stage), [&] {
      const auto seq = io::FrameSequence::open(videos[i]);
      const VideoPaths paths = video_paths(options.out, seq.video_id());
      LazyDetector detector(detector_spec_for(config.detector, videos[i]));
      switch (stage) {
        case Stage::kSort: {
          const auto fg = load_foreground(seq, detector.get(),
                                          config.detector.vehicle_classes);
          run_sort(seq, fg, config, paths);
          break;
        }
        case Stage::kBackground:
          run_background(seq, load_category(paths), config, paths);
          break;
        case Stage::kMask:
          run_mask(seq.video_id(), background::read_backgrounds(paths.backgrounds()),
                   load_category(paths), config, paths, options.mask_out);
          break;
        case Stage::kDetect: {
          const auto bgs = background::read_backgrounds(paths.backgrounds());
          const auto road = load_road_mask(paths);
          const auto fg = load_foreground(seq, detector.get(),
                                          config.detector.vehicle_classes);
          predictions[i] = to_predictions(
              run_detect(seq, bgs, road, fg, detector.get(), config, paths).events);
          break;
        }
      }
      spdlog::info("{}: {} done", seq.video_id(), to_string(stage));
    });
  });
  if (stage == Stage::kDetect) {
    std::vector<Prediction> all;
    for (auto& p : predictions) all.insert(all.end(), p.begin(), p.end());
    sort_predictions(all);
    io::write_predictions(all, options.out / "predictions.csv");
  }
}

scoring::ScoreReport run_score(const fs::path& predictions,
                               const fs::path& ground_truth,
                               const PipelineConfig& config) {
  return in_stage("score", [&] {
    const auto preds = io::read_predictions(predictions);
    const auto gts = io::read_ground_truth(ground_truth);
    return scoring::score(preds, gts, config.match_window_s);
  });
}

RunAllResult run_all(const RunAllOptions& options, const PipelineConfig& config) {
  const auto videos =
      in_stage("sort", [&] { return discover_videos(options.input); });
  std::optional<fs::path> gt_path = options.ground_truth;
  if (!gt_path && fs::exists(options.input / "gt.csv")) {
    gt_path = options.input / "gt.csv";
  }

  struct VideoRun {
    std::string video_id;
    sorting::VideoCategory category;
    std::size_t windows = 0;
    std::vector<Prediction> predictions;
    std::string inputs_hash;
    std::array<double, 4> timings{};
  };
  std::vector<VideoRun> runs_out(videos.size());

  parallel_for(videos.size(), config.jobs, [&](std::size_t i) {
    VideoRun& r = runs_out[i];
    auto t = Clock::now();
    const auto seq =
        in_stage("sort", [&] { return io::FrameSequence::open(videos[i]); });
    r.video_id = seq.video_id();
    const VideoPaths paths = video_paths(options.out, seq.video_id());
    LazyDetector detector(detector_spec_for(config.detector, videos[i]));

    const auto fg = in_stage("sort", [&] {
      return load_foreground(seq, detector.get(), config.detector.vehicle_classes);
    });
    r.category = in_stage("sort", [&] { return run_sort(seq, fg, config, paths); });
    r.timings[0] = elapsed_ms(t);

    t = Clock::now();
    const auto bgs = in_stage(
        "background", [&] { return run_background(seq, r.category, config, paths); });
    r.windows = bgs.size();
    r.timings[1] = elapsed_ms(t);

    t = Clock::now();
    const auto road = in_stage("mask", [&] {
      return run_mask(seq.video_id(), bgs, r.category, config, paths,
                      options.mask_out);
    });
    r.timings[2] = elapsed_ms(t);

    t = Clock::now();
    r.predictions = in_stage("detect", [&] {
      return to_predictions(
          run_detect(seq, bgs, road, fg, detector.get(), config, paths).events);
    });
    r.timings[3] = elapsed_ms(t);

    r.inputs_hash = in_stage("sort", [&] {
      return inputs_hash(seq, bgs, config.sorting.histogram_stride);
    });
    spdlog::info("{}: {} {}, {} windows, {} events", r.video_id,
                 to_string(r.category.lighting), to_string(r.category.road_type),
                 r.windows, r.predictions.size());
  });

  RunAllResult result;
  const char* stage_names[] = {"sort", "background", "mask", "detect"};
  for (const char* name : stage_names) result.timings_ms[name] = 0.0;
  Fnv1a input_hash;
  for (const VideoRun& r : runs_out) {
    for (std::size_t s = 0; s < 4; ++s) result.timings_ms[stage_names[s]] += r.timings[s];
    result.predictions.insert(result.predictions.end(), r.predictions.begin(),
                              r.predictions.end());
    input_hash.update(r.video_id);
    input_hash.update(r.inputs_hash);
  }
  sort_predictions(result.predictions);
  const fs::path predictions_path = options.out / "predictions.csv";
  io::write_predictions(result.predictions, predictions_path);

  if (gt_path) {
    const auto t = Clock::now();
    result.score = run_score(predictions_path, *gt_path, config);
    io::write_text(options.out / "score.json", scoring::report_to_json(*result.score));
    result.timings_ms["score"] = elapsed_ms(t);
    input_hash.update(io::read_bytes(*gt_path));
  }
  io::write_text(options.out / "config.json", config_to_json(config));

  ojson manifest;
  manifest["tool"] = "stallwatch";
  manifest["version"] = STALLWATCH_VERSION;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["inputs_hash"] = input_hash.hex();
  manifest["input"] = options.input.string();
  manifest["ground_truth"] = gt_path ? ojson(gt_path->string()) : ojson(nullptr);
  manifest["videos"] = ojson::array();
  for (const VideoRun& r : runs_out) {
    ojson v;
    v["video_id"] = r.video_id;
    v["lighting"] = to_string(r.category.lighting);
    v["road_type"] = to_string(r.category.road_type);
    v["background_window_s"] = r.category.background_window_s;
    v["windows"] = r.windows;
    v["predictions"] = r.predictions.size();
    v["inputs_hash"] = r.inputs_hash;
    manifest["videos"].push_back(std::move(v));
  }
  Fnv1a pred_hash;
  pred_hash.update(io::read_bytes(predictions_path));
  manifest["outputs"] = {{"predictions", "predictions.csv"},
                         {"predictions_hash", pred_hash.hex()},
                         {"score", gt_path ? ojson("score.json") : ojson(nullptr)}};
  manifest["timings_ms"] = result.timings_ms;
  io::write_text(options.out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace stallwatch::pipeline
