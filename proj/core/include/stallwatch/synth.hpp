#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stallwatch/media_io.hpp"
#include "stallwatch/types.hpp"
#include "stallwatch/video_sorter.hpp"

namespace stallwatch::synth {

enum class Axis { kHorizontal, kVertical };

// Intensity baselines for one lighting class.
struct Palette {
  int road = 90;
  double texture_sigma = 5.0;
  int offroad = 220;
  int vehicle = 160;
};

Palette palette_for(sorting::LightingClass lighting);

// A horizontal band spans the full width over rows [start, start + extent);
// a vertical band spans the full height over columns [start, start + extent).
struct RoadBand {
  Axis axis = Axis::kHorizontal;
  int start = 0;
  int extent = 0;
};

// Vehicles in a horizontal lane move along x centred on row `position`;
// vertical lanes move along y centred on column `position`.
struct Lane {
  Axis axis = Axis::kHorizontal;
  double position = 0.0;
  int direction = 1;
};

struct Stall {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct VehicleSpec {
  int length = 24;
  int breadth = 12;
  double speed = 40.0;  // px/s
  double spawn_s = 0.0;
  int lane = 0;
  std::optional<Stall> stall;
};

struct SceneSpec {
  std::string video_id;
  double duration_s = 60.0;
  double fps = 10.0;
  int width = 320;
  int height = 240;
  sorting::LightingClass lighting = sorting::LightingClass::kDay;
  Palette palette;
  std::vector<RoadBand> roads;
  std::vector<Lane> lanes;
  std::vector<VehicleSpec> vehicles;
  std::vector<BBox> offroad_parked;
  double noise_sigma = 3.0;
  std::uint64_t seed = 1;

  std::int64_t frame_count() const;
  void validate() const;
};

std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(std::string_view text);
SceneSpec read_scene(const std::filesystem::path& path);

// Unclipped box of a moving vehicle at time t (may lie partly off-frame).
BBox vehicle_box_raw(const SceneSpec& spec, const VehicleSpec& v, double t);
// Visible part of the vehicle, or nullopt when it is off-frame.
std::optional<BBox> vehicle_box(const SceneSpec& spec, const VehicleSpec& v,
                                double t);

// Road/off-road layer with static texture, no vehicles, no noise.
Frame render_base(const SceneSpec& spec);
// Road mask implied by the road bands.
std::vector<std::uint8_t> road_truth(const SceneSpec& spec);

class Renderer {
 public:
  explicit Renderer(SceneSpec spec);

  const SceneSpec& spec() const noexcept { return spec_; }
  const Frame& base() const noexcept { return base_; }
  // Boxes of every visible vehicle (parked first) on frame `index`.
  std::vector<BBox> boxes(std::int64_t index) const;
  Frame render(std::int64_t index) const;

 private:
  SceneSpec spec_;
  Frame base_;
  std::vector<std::int16_t> noise_;
};

std::vector<Detection> oracle_detections(const SceneSpec& spec);
std::vector<GroundTruthEntry> ground_truth(const SceneSpec& spec);

struct GeneratedVideo {
  io::SequenceMeta meta;
  std::size_t detection_count = 0;
  std::vector<GroundTruthEntry> ground_truth;
};

// Writes meta.json, scene.json, frame_NNNNNN.pgm and detections.jsonl.
GeneratedVideo generate(const SceneSpec& spec, const std::filesystem::path& dir);

// --- corpora -----------------------------------------------------------------

enum class Preset { kStandard, kSmoke, kNoStall };
Preset parse_preset(std::string_view name);
std::string_view to_string(Preset preset);

std::vector<SceneSpec> preset_scenes(Preset preset, std::uint64_t seed);

struct CorpusResult {
  std::vector<std::string> video_ids;
  std::vector<GroundTruthEntry> ground_truth;
};

// One subdirectory per video plus gt.csv and corpus.json.
CorpusResult corpus(Preset preset, std::uint64_t seed,
                    const std::filesystem::path& out_dir);

// Scene used to calibrate mask constants: one road band, no vehicles.
SceneSpec calibration_scene(sorting::LightingClass lighting,
                            std::uint64_t seed);

}  // namespace stallwatch::synth
