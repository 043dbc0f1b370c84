#include "stallwatch/synth.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "stallwatch/error.hpp"
#include "stallwatch/hashing.hpp"

namespace stallwatch::synth {

using sorting::LightingClass;
namespace fs = std::filesystem;

Palette palette_for(LightingClass lighting) {
  switch (lighting) {
    case LightingClass::kNight: return {15, 2.0, 45, 200};
    case LightingClass::kSnow: return {100, 5.0, 245, 170};
    case LightingClass::kDay: break;
  }
  return {90, 5.0, 220, 160};
}

std::int64_t SceneSpec::frame_count() const {
  return std::llround(duration_s * fps);
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidSpec, what);
}

bool in_range(int v) { return v >= 0 && v <= 255; }

}  // namespace

void SceneSpec::validate() const {
  if (video_id.empty()) invalid("video_id is empty");
  if (!(duration_s > 0.0) || !(fps > 0.0)) invalid("duration and fps must be > 0");
  if (width <= 0 || height <= 0) invalid("frame size must be positive");
  if (!in_range(palette.road) || !in_range(palette.offroad) ||
      !in_range(palette.vehicle) || palette.texture_sigma < 0.0 ||
      noise_sigma < 0.0) {
    invalid("palette intensities must lie in [0,255]");
  }
  if (lighting == LightingClass::kNight &&
      (palette.road > 50 || palette.offroad > 50)) {
    invalid("night baselines must be <= 50");
  }
  if (lighting == LightingClass::kSnow && palette.offroad < 200) {
    invalid("snow off-road baseline must be >= 200");
  }
  for (const RoadBand& r : roads) {
    const int limit = r.axis == Axis::kHorizontal ? height : width;
    if (r.start < 0 || r.extent <= 0 || r.start + r.extent > limit) {
      invalid("road band outside the frame");
    }
  }
  for (const Lane& l : lanes) {
    if (l.direction != 1 && l.direction != -1) invalid("lane direction must be +-1");
  }
  for (const BBox& b : offroad_parked) {
    if (!b.fits(width, height)) invalid("parked vehicle outside the frame");
  }
  for (const VehicleSpec& v : vehicles) {
    if (v.lane < 0 || static_cast<std::size_t>(v.lane) >= lanes.size()) {
      invalid(fmt::format("vehicle references lane {}", v.lane));
    }
    const Lane& lane = lanes[static_cast<std::size_t>(v.lane)];
    const int along = lane.axis == Axis::kHorizontal ? width : height;
    const int across = lane.axis == Axis::kHorizontal ? height : width;
    if (v.length <= 0 || v.breadth <= 0 || v.length > along ||
        v.breadth > across) {
      invalid(fmt::format("vehicle {}x{} does not fit the frame", v.length,
                          v.breadth));
    }
    if (!(v.speed > 0.0)) invalid("vehicle speed must be > 0");
    if (v.stall) {
      if (v.stall->start_s < 0.0 || !(v.stall->end_s > v.stall->start_s) ||
          v.stall->end_s > duration_s) {
        invalid("stall must lie within the video");
      }
      if (v.stall->start_s < v.spawn_s) invalid("stall before spawn");
      const BBox at_stall = vehicle_box_raw(*this, v, v.stall->start_s);
      if (!at_stall.fits(width, height)) {
        invalid("stalled vehicle must be fully inside the frame");
      }
    }
  }
}

// --- JSON -----------------------------------------------------------------------

namespace {

using ojson = nlohmann::ordered_json;

std::string_view axis_name(Axis a) {
  return a == Axis::kHorizontal ? "horizontal" : "vertical";
}

Axis parse_axis(const std::string& s) {
  if (s == "horizontal") return Axis::kHorizontal;
  if (s == "vertical") return Axis::kVertical;
  invalid(fmt::format("unknown axis '{}'", s));
}

}  // namespace

std::string scene_to_json(const SceneSpec& spec) {
  ojson j;
  j["video_id"] = spec.video_id;
  j["duration_s"] = spec.duration_s;
  j["fps"] = spec.fps;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["lighting"] = sorting::to_string(spec.lighting);
  j["palette"] = {{"road", spec.palette.road},
                  {"texture_sigma", spec.palette.texture_sigma},
                  {"offroad", spec.palette.offroad},
                  {"vehicle", spec.palette.vehicle}};
  j["roads"] = ojson::array();
  for (const auto& r : spec.roads) {
    j["roads"].push_back(
        {{"axis", axis_name(r.axis)}, {"start", r.start}, {"extent", r.extent}});
  }
  j["lanes"] = ojson::array();
  for (const auto& l : spec.lanes) {
    j["lanes"].push_back({{"axis", axis_name(l.axis)},
                          {"position", l.position},
                          {"direction", l.direction}});
  }
  j["vehicles"] = ojson::array();
  for (const auto& v : spec.vehicles) {
    ojson o{{"length", v.length}, {"breadth", v.breadth}, {"speed", v.speed},
            {"spawn_s", v.spawn_s}, {"lane", v.lane}};
    if (v.stall) o["stall"] = {v.stall->start_s, v.stall->end_s};
    j["vehicles"].push_back(std::move(o));
  }
  j["offroad_parked"] = ojson::array();
  for (const auto& b : spec.offroad_parked) {
    j["offroad_parked"].push_back({b.x, b.y, b.w, b.h});
  }
  j["noise_sigma"] = spec.noise_sigma;
  j["seed"] = spec.seed;
  return j.dump(1) + "\n";
}

SceneSpec scene_from_json(std::string_view text) {
  SceneSpec s;
  try {
    const auto j = nlohmann::json::parse(text.begin(), text.end());
    s.video_id = j.at("video_id").get<std::string>();
    s.duration_s = j.at("duration_s").get<double>();
    s.fps = j.at("fps").get<double>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.lighting = sorting::parse_lighting(j.value("lighting", "day"));
    s.palette = palette_for(s.lighting);
    if (j.contains("palette")) {
      const auto& p = j.at("palette");
      s.palette.road = p.value("road", s.palette.road);
      s.palette.texture_sigma = p.value("texture_sigma", s.palette.texture_sigma);
      s.palette.offroad = p.value("offroad", s.palette.offroad);
      s.palette.vehicle = p.value("vehicle", s.palette.vehicle);
    }
    for (const auto& r : j.value("roads", nlohmann::json::array())) {
      s.roads.push_back({parse_axis(r.at("axis").get<std::string>()),
                         r.at("start").get<int>(), r.at("extent").get<int>()});
    }
    for (const auto& l : j.value("lanes", nlohmann::json::array())) {
      s.lanes.push_back({parse_axis(l.at("axis").get<std::string>()),
                         l.at("position").get<double>(),
                         l.value("direction", 1)});
    }
    for (const auto& v : j.value("vehicles", nlohmann::json::array())) {
      VehicleSpec vs;
      vs.length = v.value("length", vs.length);
      vs.breadth = v.value("breadth", vs.breadth);
      vs.speed = v.value("speed", vs.speed);
      vs.spawn_s = v.value("spawn_s", vs.spawn_s);
      vs.lane = v.value("lane", vs.lane);
      if (v.contains("stall")) {
        const auto& st = v.at("stall");
        vs.stall = Stall{st.at(0).get<double>(), st.at(1).get<double>()};
      }
      s.vehicles.push_back(vs);
    }
    for (const auto& b : j.value("offroad_parked", nlohmann::json::array())) {
      s.offroad_parked.push_back({b.at(0).get<int>(), b.at(1).get<int>(),
                                  b.at(2).get<int>(), b.at(3).get<int>()});
    }
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    invalid(fmt::format("scene: {}", e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidSpec) throw;
    invalid(e.what());
  }
  s.validate();
  return s;
}

SceneSpec read_scene(const fs::path& path) {
  return scene_from_json(io::read_text(path));
}

// --- geometry ---------------------------------------------------------------------

namespace {

double travelled(const VehicleSpec& v, double t) {
  double moving = t - v.spawn_s;
  if (v.stall) {
    const double to_stall = v.stall->start_s - v.spawn_s;
    if (t > v.stall->end_s) {
      moving = to_stall + (t - v.stall->end_s);
    } else if (t >= v.stall->start_s) {
      moving = to_stall;
    }
  }
  return v.speed * moving;
}

std::optional<BBox> clip(const BBox& b, int width, int height) {
  const int x0 = std::max(0, b.x);
  const int y0 = std::max(0, b.y);
  const int x1 = std::min(width, b.right());
  const int y1 = std::min(height, b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

BBox vehicle_box_raw(const SceneSpec& spec, const VehicleSpec& v, double t) {
  const Lane& lane = spec.lanes.at(static_cast<std::size_t>(v.lane));
  const double d = travelled(v, t);
  const bool horizontal = lane.axis == Axis::kHorizontal;
  const int along_extent = horizontal ? spec.width : spec.height;
  const double lead = lane.direction > 0 ? -v.length + d : along_extent - d;
  const int along = static_cast<int>(std::floor(lead));
  const int across =
      static_cast<int>(std::lround(lane.position - v.breadth / 2.0));
  if (horizontal) return {along, across, v.length, v.breadth};
  return {across, along, v.breadth, v.length};
}

std::optional<BBox> vehicle_box(const SceneSpec& spec, const VehicleSpec& v,
                                double t) {
  if (t < v.spawn_s) return std::nullopt;
  return clip(vehicle_box_raw(spec, v, t), spec.width, spec.height);
}

namespace {

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool on_road(const SceneSpec& spec, int x, int y) {
  for (const RoadBand& r : spec.roads) {
    const int c = r.axis == Axis::kHorizontal ? y : x;
    if (c >= r.start && c < r.start + r.extent) return true;
  }
  return false;
}

void fill(Frame& f, const BBox& b, std::uint8_t value) {
  for (int y = b.y; y < b.bottom(); ++y) {
    for (int x = b.x; x < b.right(); ++x) f.at(x, y) = value;
  }
}

}  // namespace

Frame render_base(const SceneSpec& spec) {
  Frame f(spec.width, spec.height,
          static_cast<std::uint8_t>(spec.palette.offroad));
  Rng texture(splitmix64(spec.seed ^ 0x7e47u));
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double tex = texture.normal() * spec.palette.texture_sigma;
      if (on_road(spec, x, y)) f.at(x, y) = clamp_u8(spec.palette.road + tex);
    }
  }
  return f;
}

std::vector<std::uint8_t> road_truth(const SceneSpec& spec) {
  std::vector<std::uint8_t> bits(
      static_cast<std::size_t>(spec.width) * spec.height, 0);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      bits[static_cast<std::size_t>(y) * spec.width + x] =
          on_road(spec, x, y) ? 1 : 0;
    }
  }
  return bits;
}

Renderer::Renderer(SceneSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  base_ = render_base(spec_);
  noise_.resize(1 << 16);
  Rng rng(splitmix64(spec_.seed ^ 0x9015eu));
  for (auto& n : noise_) {
    n = static_cast<std::int16_t>(std::lround(rng.normal() * spec_.noise_sigma));
  }
}

std::vector<BBox> Renderer::boxes(std::int64_t index) const {
  const double t = static_cast<double>(index) / spec_.fps;
  std::vector<BBox> out(spec_.offroad_parked.begin(),
                        spec_.offroad_parked.end());
  for (const VehicleSpec& v : spec_.vehicles) {
    if (auto b = vehicle_box(spec_, v, t)) out.push_back(*b);
  }
  return out;
}

Frame Renderer::render(std::int64_t index) const {
  Frame f = base_;
  const auto vehicle = static_cast<std::uint8_t>(spec_.palette.vehicle);
  for (const BBox& b : boxes(index)) fill(f, b, vehicle);
  if (spec_.noise_sigma > 0.0) {
    // xorshift64* stream keyed by frame index; four table lookups per draw.
    std::uint64_t state =
        splitmix64(spec_.seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
    if (state == 0) state = 1;
    auto px = f.pixels();
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < px.size(); ++i) {
      if (i % 4 == 0) {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        bits = state * 0x2545f4914f6cdd1dULL;
      }
      const int v = px[i] + noise_[bits & 0xffffu];
      bits >>= 16;
      px[i] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
  }
  return f;
}

std::vector<Detection> oracle_detections(const SceneSpec& spec) {
  std::vector<Detection> out;
  const std::int64_t n = spec.frame_count();
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.fps;
    for (const BBox& b : spec.offroad_parked) out.push_back({i, "car", 1.0, b});
    for (const VehicleSpec& v : spec.vehicles) {
      if (auto b = vehicle_box(spec, v, t)) out.push_back({i, "car", 1.0, *b});
    }
  }
  return out;
}

std::vector<GroundTruthEntry> ground_truth(const SceneSpec& spec) {
  std::vector<GroundTruthEntry> out;
  for (const VehicleSpec& v : spec.vehicles) {
    if (v.stall) out.push_back({spec.video_id, v.stall->start_s, v.stall->end_s});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.start < b.start;
  });
  return out;
}

GeneratedVideo generate(const SceneSpec& spec, const fs::path& dir) {
  spec.validate();
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("frame_") && name.ends_with(".pgm")) {
      fs::remove(entry.path());
    }
  }
  const Renderer renderer(spec);
  GeneratedVideo out;
  out.meta = {spec.video_id, spec.fps, spec.width, spec.height,
              spec.frame_count()};
  for (std::int64_t i = 0; i < out.meta.frame_count; ++i) {
    io::write_frame(renderer.render(i), dir / io::frame_file_name(i));
  }
  const auto detections = oracle_detections(spec);
  io::write_detections(detections, dir / "detections.jsonl");
  io::write_meta(out.meta, dir / "meta.json");
  io::write_text(dir / "scene.json", scene_to_json(spec));
  out.detection_count = detections.size();
  out.ground_truth = ground_truth(spec);
  return out;
}

// --- presets ------------------------------------------------------------------

namespace {

struct Layout {
  int horizontal_lanes[3] = {-1, -1, -1};  // eastbound, westbound, shoulder
  int vertical_lanes[2] = {-1, -1};        // southbound, northbound
};

int add_lane(SceneSpec& s, Axis axis, double position, int direction) {
  s.lanes.push_back({axis, position, direction});
  return static_cast<int>(s.lanes.size()) - 1;
}

Layout freeway(SceneSpec& s, int start, int extent) {
  Layout l;
  s.roads.push_back({Axis::kHorizontal, start, extent});
  l.horizontal_lanes[0] = add_lane(s, Axis::kHorizontal, start + 0.2 * extent, 1);
  l.horizontal_lanes[1] = add_lane(s, Axis::kHorizontal, start + 0.5 * extent, -1);
  l.horizontal_lanes[2] = add_lane(s, Axis::kHorizontal, start + 0.8 * extent, 1);
  return l;
}

Layout intersection(SceneSpec& s, int h_start, int v_start, int extent) {
  Layout l = freeway(s, h_start, extent);
  s.roads.push_back({Axis::kVertical, v_start, extent});
  l.vertical_lanes[0] = add_lane(s, Axis::kVertical, v_start + 0.2 * extent, 1);
  l.vertical_lanes[1] = add_lane(s, Axis::kVertical, v_start + 0.5 * extent, -1);
  return l;
}

struct TrafficStyle {
  double min_headway = 4.0;
  double max_headway = 10.0;
  double min_speed = 30.0;
  double max_speed = 60.0;
  int min_length = 20;
  int max_length = 30;
  int breadth = 12;
};

void add_traffic(SceneSpec& s, int lane, Rng& rng, const TrafficStyle& style) {
  // Start before t=0 so the first frame already carries traffic.
  double t = -rng.uniform(4.0, 10.0);
  while (t < s.duration_s) {
    VehicleSpec v;
    v.lane = lane;
    v.length = static_cast<int>(rng.between(style.min_length, style.max_length));
    v.breadth = style.breadth;
    v.speed = std::round(rng.uniform(style.min_speed, style.max_speed));
    v.spawn_s = std::round(t * 10.0) / 10.0;
    s.vehicles.push_back(v);
    t += rng.uniform(style.min_headway, style.max_headway);
  }
}

// Vehicle that drives along the shoulder lane and stands still with its left
// (or top) edge at `stop_at` during [start, end].
void add_stall(SceneSpec& s, int lane, int stop_at, double start, double end,
               int length, int breadth) {
  VehicleSpec v;
  v.lane = lane;
  v.length = length;
  v.breadth = breadth;
  v.speed = 40.0;
  v.spawn_s = start - static_cast<double>(stop_at + length) / v.speed;
  v.stall = Stall{start, end};
  s.vehicles.push_back(v);
}

SceneSpec base_scene(std::string id, LightingClass lighting, double duration,
                     std::uint64_t seed, int width = 320, int height = 240,
                     double fps = 10.0) {
  SceneSpec s;
  s.video_id = std::move(id);
  s.lighting = lighting;
  s.palette = palette_for(lighting);
  s.duration_s = duration;
  s.fps = fps;
  s.width = width;
  s.height = height;
  s.seed = splitmix64(seed ^ fnv1a(s.video_id));
  return s;
}

struct SceneRecipe {
  const char* id;
  LightingClass lighting;
  bool intersection;
  double duration;
  std::optional<Stall> stall;
  int stall_at;
  bool parked;
};

SceneSpec build_standard(const SceneRecipe& r, std::uint64_t seed) {
  SceneSpec s = base_scene(r.id, r.lighting, r.duration, seed);
  Rng rng(s.seed);
  TrafficStyle style;
  Layout layout;
  const bool snow = r.lighting == LightingClass::kSnow;
  if (r.intersection) {
    // Snow keeps its bands narrow so the bright off-road mass dominates.
    if (snow) {
      style.breadth = 10;
      layout = intersection(s, 100, 140, 40);
    } else {
      layout = intersection(s, 80, 120, 80);
    }
  } else {
    layout = snow ? freeway(s, 90, 60) : freeway(s, 80, 80);
  }
  add_traffic(s, layout.horizontal_lanes[0], rng, style);
  add_traffic(s, layout.horizontal_lanes[1], rng, style);
  if (r.intersection) {
    add_traffic(s, layout.vertical_lanes[0], rng, style);
    add_traffic(s, layout.vertical_lanes[1], rng, style);
  }
  if (r.stall) {
    add_stall(s, layout.horizontal_lanes[2], r.stall_at, r.stall->start_s,
              r.stall->end_s, 24, style.breadth);
  }
  if (r.parked) {
    for (int x : {180, 210, 240}) s.offroad_parked.push_back({x, 20, 24, 12});
  }
  return s;
}

std::vector<SceneSpec> standard(std::uint64_t seed) {
  using L = LightingClass;
  // Scenes whose category uses 5-minute backgrounds run 15 minutes so a
  // stall spans two windows and the first window shows the empty road.
  const SceneRecipe recipes[] = {
      {"day_freeway_stall_a", L::kDay, false, 300, Stall{60, 240}, 150, false},
      {"day_freeway_stall_b", L::kDay, false, 300, Stall{150, 280}, 220, false},
      {"day_freeway_clear", L::kDay, false, 300, std::nullopt, 0, false},
      {"day_freeway_parked", L::kDay, false, 300, std::nullopt, 0, true},
      {"day_intersection_stall", L::kDay, true, 900, Stall{320, 820}, 50, false},
      {"day_intersection_clear", L::kDay, true, 300, std::nullopt, 0, false},
      {"night_freeway_stall", L::kNight, false, 900, Stall{340, 800}, 160, false},
      {"night_freeway_parked", L::kNight, false, 300, std::nullopt, 0, true},
      {"night_intersection_clear", L::kNight, true, 300, std::nullopt, 0, false},
      {"snow_freeway_stall", L::kSnow, false, 900, Stall{330, 810}, 120, false},
      {"snow_freeway_parked", L::kSnow, false, 300, std::nullopt, 0, true},
      {"snow_intersection_clear", L::kSnow, true, 300, std::nullopt, 0, false},
  };
  std::vector<SceneSpec> out;
  for (const auto& r : recipes) out.push_back(build_standard(r, seed));
  return out;
}

// Small, short scenes for fast tests (160x120 at 5 fps).
SceneSpec small_scene(const char* id, LightingClass lighting,
                      std::optional<Stall> stall, bool parked,
                      std::uint64_t seed) {
  SceneSpec s = base_scene(id, lighting, 60.0, seed, 160, 120, 5.0);
  Rng rng(s.seed);
  TrafficStyle style;
  style.min_length = 12;
  style.max_length = 16;
  style.breadth = 6;
  style.min_speed = 20.0;
  style.max_speed = 30.0;
  style.min_headway = 3.0;
  style.max_headway = 6.0;
  const Layout layout = freeway(s, 40, 40);
  add_traffic(s, layout.horizontal_lanes[0], rng, style);
  add_traffic(s, layout.horizontal_lanes[1], rng, style);
  if (stall) {
    add_stall(s, layout.horizontal_lanes[2], 70, stall->start_s, stall->end_s,
              14, 6);
  }
  if (parked) {
    for (int x : {90, 110, 130}) s.offroad_parked.push_back({x, 10, 14, 6});
  }
  return s;
}

}  // namespace

Preset parse_preset(std::string_view name) {
  if (name == "standard") return Preset::kStandard;
  if (name == "smoke") return Preset::kSmoke;
  if (name == "no-stall") return Preset::kNoStall;
  throw Error(ErrorCode::kInvalidParam, fmt::format("unknown preset '{}'", name));
}

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::kSmoke: return "smoke";
    case Preset::kNoStall: return "no-stall";
    case Preset::kStandard: break;
  }
  return "standard";
}

std::vector<SceneSpec> preset_scenes(Preset preset, std::uint64_t seed) {
  using L = LightingClass;
  switch (preset) {
    case Preset::kStandard:
      return standard(seed);
    case Preset::kSmoke:
      return {small_scene("smoke_day_stall", L::kDay, Stall{22, 55}, false, seed),
              small_scene("smoke_day_parked", L::kDay, std::nullopt, true, seed),
              small_scene("smoke_night_clear", L::kNight, std::nullopt, false,
                          seed)};
    case Preset::kNoStall:
      return {small_scene("nostall_day", L::kDay, std::nullopt, false, seed),
              small_scene("nostall_snow", L::kSnow, std::nullopt, true, seed)};
  }
  return {};
}

CorpusResult corpus(Preset preset, std::uint64_t seed, const fs::path& out_dir) {
  const auto scenes = preset_scenes(preset, seed);
  fs::create_directories(out_dir);
  CorpusResult result;
  for (const SceneSpec& s : scenes) {
    GeneratedVideo v = generate(s, out_dir / s.video_id);
    result.video_ids.push_back(s.video_id);
    result.ground_truth.insert(result.ground_truth.end(),
                               v.ground_truth.begin(), v.ground_truth.end());
  }
  std::sort(result.ground_truth.begin(), result.ground_truth.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.video_id, a.start) < std::tie(b.video_id, b.start);
            });
  io::write_ground_truth(result.ground_truth, out_dir / "gt.csv");
  ojson manifest;
  manifest["preset"] = to_string(preset);
  manifest["seed"] = seed;
  manifest["videos"] = result.video_ids;
  io::write_text(out_dir / "corpus.json", manifest.dump(2) + "\n");
  return result;
}

SceneSpec calibration_scene(LightingClass lighting, std::uint64_t seed) {
  SceneSpec s = base_scene(fmt::format("calibration_{}", sorting::to_string(lighting)),
                           lighting, 3.0, seed);
  if (lighting == LightingClass::kSnow) {
    freeway(s, 90, 60);
  } else {
    freeway(s, 80, 80);
  }
  return s;
}

}  // namespace stallwatch::synth
