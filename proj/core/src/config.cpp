#include "stallwatch/config.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "stallwatch/error.hpp"
#include "stallwatch/hashing.hpp"
#include "stallwatch/media_io.hpp"

namespace stallwatch::pipeline {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

void check(bool ok, const std::string& what) {
  if (!ok) config_error(what);
}

json constants_to_json(const sorting::MaskConstants& c) {
  return json{{"k1", c.k1}, {"k2", c.k2}};
}

sorting::MaskConstants constants_from_json(const json& j) {
  return {j.at("k1").get<double>(), j.at("k2").get<double>()};
}

bool same_kind(const json& base, const json& value) {
  if (base.is_number_float()) return value.is_number();
  if (base.is_number_unsigned()) return value.is_number_unsigned();
  if (base.is_number_integer()) return value.is_number_integer();
  return base.type() == value.type();
}

// Overlays `value` onto `base`, rejecting keys that `base` does not have.
void overlay(json& base, const json& value, const std::string& where) {
  if (base.is_object()) {
    check(value.is_object(), fmt::format("'{}' must be an object", where));
    for (const auto& [key, item] : value.items()) {
      const std::string path = where.empty() ? key : where + "." + key;
      check(base.contains(key), fmt::format("unknown key '{}'", path));
      overlay(base[key], item, path);
    }
    return;
  }
  check(same_kind(base, value),
        fmt::format("'{}' has the wrong type ({})", where, value.type_name()));
  base = value;
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    check(jobs >= 0, "jobs must be >= 0");
    check(sample_fraction > 0.0 && sample_fraction <= 1.0,
          "background.sample_fraction must be in (0, 1]");
    check(window_override_s >= 0.0, "background.window_seconds must be >= 0");
    check(sorting.histogram_stride >= 1, "sorting.histogram_stride must be >= 1");
    check(sorting.peaks.smooth_radius >= 0, "sorting.smooth_radius must be >= 0");
    check(sorting.peaks.min_prominence >= 0.0,
          "sorting.min_prominence must be >= 0");
    check(sorting.gate_fraction > 0.0, "sorting.gate_fraction must be > 0");
    check(sorting.min_move_px >= 0.0, "sorting.min_move_px must be >= 0");
    check(sorting.support_fraction >= 0.0 && sorting.support_fraction <= 1.0,
          "sorting.support_fraction must be in [0, 1]");
    for (auto c : {sorting::LightingClass::kDay, sorting::LightingClass::kNight,
                   sorting::LightingClass::kSnow}) {
      const auto& k = sorting.mask_constants[c];
      check(k.k1 > 0.0 && k.k2 > 0.0,
            fmt::format("mask.constants.{} needs k1, k2 > 0", to_string(c)));
    }
    check(mask_block == 0 || (mask_block >= 3 && mask_block % 2 == 1),
          "mask.block must be 0 or an odd number >= 3");
    check(min_overlap > 0.0 && min_overlap <= 1.0,
          "mask.min_overlap must be in (0, 1]");
    check(min_support_seconds >= 0.0, "decision.min_support_seconds must be >= 0");
    decision_for(1.0).validate();
    check(detector.timeout_s > 0.0, "detector.timeout_seconds must be > 0");
    check(detector.kind != detect::DetectorKind::kExternalProcess ||
              !detector.command.empty(),
          "detector.command is required for the external detector");
    check(match_window_s >= 0.0, "scoring.window_seconds must be >= 0");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(e.what());
  }
}

anomaly::DecisionParams PipelineConfig::decision_for(double fps) const {
  anomaly::DecisionParams out = decision;
  out.min_support_frames = anomaly::support_frames_for(min_support_seconds, fps);
  return out;
}

anomaly::AnalysisOptions PipelineConfig::analysis_options(double fps) const {
  anomaly::AnalysisOptions out;
  out.decision = decision_for(fps);
  out.mask_block = mask_block;
  out.min_overlap = min_overlap;
  out.sample_fraction = sample_fraction;
  out.seed = seed;
  return out;
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["background"] = {{"sample_fraction", c.sample_fraction},
                     {"window_seconds", c.window_override_s}};
  j["sorting"] = {{"histogram_stride", c.sorting.histogram_stride},
                  {"smooth_radius", c.sorting.peaks.smooth_radius},
                  {"min_prominence", c.sorting.peaks.min_prominence},
                  {"gate_fraction", c.sorting.gate_fraction},
                  {"min_move_px", c.sorting.min_move_px},
                  {"support_fraction", c.sorting.support_fraction}};
  j["mask"] = {{"block", c.mask_block},
               {"min_overlap", c.min_overlap},
               {"constants",
                {{"day", constants_to_json(c.sorting.mask_constants.day)},
                 {"night", constants_to_json(c.sorting.mask_constants.night)},
                 {"snow", constants_to_json(c.sorting.mask_constants.snow)}}}};
  j["decision"] = {{"score_min", c.decision.score_min},
                   {"area_min", c.decision.area_min},
                   {"iou_support", c.decision.iou_support},
                   {"iou_merge", c.decision.iou_merge},
                   {"min_support_seconds", c.min_support_seconds},
                   {"min_support_density", c.decision.min_support_density},
                   {"min_windows", c.decision.min_windows}};
  j["detector"] = {{"kind", std::string(to_string(c.detector.kind))},
                   {"command", c.detector.command},
                   {"directory", c.detector.directory.string()},
                   {"scene", c.detector.scene.string()},
                   {"timeout_seconds", c.detector.timeout_s},
                   {"vehicle_classes", c.detector.vehicle_classes}};
  j["scoring"] = {{"window_seconds", c.match_window_s}};
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(std::string_view text) {
  json user;
  try {
    user = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    config_error(fmt::format("config is not valid JSON: {}", e.what()));
  }
  json merged = json::parse(config_to_json(PipelineConfig{}));
  overlay(merged, user, "");

  PipelineConfig c;
  try {
    c.seed = merged.at("seed").get<std::uint64_t>();
    c.jobs = merged.at("jobs").get<int>();
    const json& bg = merged.at("background");
    c.sample_fraction = bg.at("sample_fraction").get<double>();
    c.window_override_s = bg.at("window_seconds").get<double>();
    const json& s = merged.at("sorting");
    c.sorting.histogram_stride = s.at("histogram_stride").get<std::int64_t>();
    c.sorting.peaks.smooth_radius = s.at("smooth_radius").get<int>();
    c.sorting.peaks.min_prominence = s.at("min_prominence").get<double>();
    c.sorting.gate_fraction = s.at("gate_fraction").get<double>();
    c.sorting.min_move_px = s.at("min_move_px").get<double>();
    c.sorting.support_fraction = s.at("support_fraction").get<double>();
    const json& m = merged.at("mask");
    c.mask_block = m.at("block").get<int>();
    c.min_overlap = m.at("min_overlap").get<double>();
    c.sorting.mask_constants.day = constants_from_json(m.at("constants").at("day"));
    c.sorting.mask_constants.night =
        constants_from_json(m.at("constants").at("night"));
    c.sorting.mask_constants.snow =
        constants_from_json(m.at("constants").at("snow"));
    const json& d = merged.at("decision");
    c.decision.score_min = d.at("score_min").get<double>();
    c.decision.area_min = d.at("area_min").get<double>();
    c.decision.iou_support = d.at("iou_support").get<double>();
    c.decision.iou_merge = d.at("iou_merge").get<double>();
    c.min_support_seconds = d.at("min_support_seconds").get<double>();
    c.decision.min_support_density = d.at("min_support_density").get<double>();
    c.decision.min_windows = d.at("min_windows").get<int>();
    const json& det = merged.at("detector");
    c.detector.kind =
        detect::parse_detector_kind(det.at("kind").get<std::string>());
    c.detector.command = det.at("command").get<std::string>();
    c.detector.directory = det.at("directory").get<std::string>();
    c.detector.scene = det.at("scene").get<std::string>();
    c.detector.timeout_s = det.at("timeout_seconds").get<double>();
    c.detector.vehicle_classes =
        det.at("vehicle_classes").get<std::vector<std::string>>();
    c.match_window_s = merged.at("scoring").at("window_seconds").get<double>();
  } catch (const json::exception& e) {
    config_error(fmt::format("bad config value: {}", e.what()));
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    config_error(fmt::format("cannot read config '{}': {}", path.string(),
                             e.what()));
  }
  return config_from_json(text);
}

std::string config_hash(const PipelineConfig& config) {
  Fnv1a h;
  h.update(config_to_json(config));
  return h.hex();
}

}  // namespace stallwatch::pipeline
