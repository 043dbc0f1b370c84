#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stallwatch/anomaly.hpp"
#include "stallwatch/config.hpp"
#include "stallwatch/error.hpp"
#include "stallwatch/media_io.hpp"
#include "stallwatch/scoring.hpp"
#include "stallwatch/video_sorter.hpp"

namespace stallwatch::pipeline {

namespace fs = std::filesystem;

// Error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Input videos: either a single video directory (holding meta.json) or a
// corpus directory whose subdirectories are videos. corpus.json, when
// present, fixes the order.
std::vector<fs::path> discover_videos(const fs::path& input);

// Per-video artifact layout under an output directory.
struct VideoPaths {
  fs::path root;

  fs::path category() const { return root / "category.json"; }
  fs::path backgrounds() const { return root / "backgrounds"; }
  fs::path masks() const { return root / "masks"; }
  fs::path road_mask() const { return root / "road_mask.pgm"; }
  fs::path events() const { return root / "events.json"; }
  fs::path predictions() const { return root / "predictions.csv"; }
};

VideoPaths video_paths(const fs::path& out_dir, const std::string& video_id);
std::string mask_file_name(const background::Window& window);

// Foreground detections: <video>/detections.jsonl (restricted to
// `vehicle_classes`) when present, otherwise the detector is run on every
// frame.
std::vector<Detection> load_foreground(
    const io::FrameSequence& seq, detect::Detector& detector,
    const std::vector<std::string>& vehicle_classes);

// Resolves per-video locators (scene file, precomputed directory) and
// substitutes {video_dir} in an external detector command.
detect::DetectorSpec detector_spec_for(const detect::DetectorSpec& spec,
                                       const fs::path& video_dir);

// --- single-video stages -------------------------------------------------------
// Each stage persists its artifacts under `paths` and returns them, so a
// later stage may either take the returned value or reload it from disk.

sorting::VideoCategory run_sort(const io::FrameSequence& seq,
                                std::span<const Detection> foreground,
                                const PipelineConfig& config,
                                const VideoPaths& paths);

std::vector<background::BackgroundFrame> run_background(
    const io::FrameSequence& seq, const sorting::VideoCategory& category,
    const PipelineConfig& config, const VideoPaths& paths);

// `mask_out`, when set, receives copies of the mask PGMs under
// <mask_out>/<video_id>/.
mask::Mask run_mask(const std::string& video_id,
                    std::span<const background::BackgroundFrame> backgrounds,
                    const sorting::VideoCategory& category,
                    const PipelineConfig& config, const VideoPaths& paths,
                    const std::optional<fs::path>& mask_out);

anomaly::Localization run_detect(
    const io::FrameSequence& seq,
    std::span<const background::BackgroundFrame> backgrounds,
    const mask::Mask& road, std::span<const Detection> foreground,
    detect::Detector& detector, const PipelineConfig& config,
    const VideoPaths& paths);

sorting::VideoCategory load_category(const VideoPaths& paths);
mask::Mask load_road_mask(const VideoPaths& paths);

// --- corpus-level ------------------------------------------------------------------

enum class Stage { kSort, kBackground, kMask, kDetect };
std::string_view to_string(Stage stage);

struct StageOptions {
  fs::path input;
  fs::path out;
  std::optional<fs::path> mask_out;
};

// Runs one stage for every input video, reading earlier stages' artifacts
// from `out`. The detect stage also writes <out>/predictions.csv.
void run_stage(Stage stage, const StageOptions& options,
               const PipelineConfig& config);

struct RunAllOptions {
  fs::path input;
  fs::path out;
  // Defaults to <input>/gt.csv when that file exists.
  std::optional<fs::path> ground_truth;
  std::optional<fs::path> mask_out;
};

struct RunAllResult {
  std::vector<Prediction> predictions;
  std::optional<scoring::ScoreReport> score;
  std::map<std::string, double> timings_ms;
};

// sort -> background -> mask -> detect for each video (in parallel across
// videos), then predictions.csv, score.json and manifest.json.
RunAllResult run_all(const RunAllOptions& options, const PipelineConfig& config);

scoring::ScoreReport run_score(const fs::path& predictions,
                               const fs::path& ground_truth,
                               const PipelineConfig& config);

}  // namespace stallwatch::pipeline
