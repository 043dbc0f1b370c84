#include "stallwatch/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "json_records.hpp"
#include "stallwatch/error.hpp"
#include "stallwatch/media_io.hpp"
#include "subprocess.hpp"

namespace stallwatch::detect {

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kExternalProcess: return "external";
    case DetectorKind::kPrecomputedFiles: return "precomputed";
    case DetectorKind::kOracleSynthetic: break;
  }
  return "oracle";
}

DetectorKind parse_detector_kind(std::string_view text) {
  if (text == "external") return DetectorKind::kExternalProcess;
  if (text == "precomputed") return DetectorKind::kPrecomputedFiles;
  if (text == "oracle") return DetectorKind::kOracleSynthetic;
  throw Error(ErrorCode::kConfigError,
              fmt::format("unknown detector kind '{}'", text));
}

std::vector<Detection> Detector::detect(const ImageRef& image) {
  std::vector<Detection> raw = run(image);
  int width = 0;
  int height = 0;
  if (image.frame != nullptr) {
    width = image.frame->width();
    height = image.frame->height();
  } else {
    std::tie(width, height) = io::read_pgm_dimensions(image.path);
  }
  std::vector<Detection> out;
  out.reserve(raw.size());
  for (Detection& d : raw) {
    if (!vehicle_classes_.empty() &&
        std::find(vehicle_classes_.begin(), vehicle_classes_.end(),
                  d.class_label) == vehicle_classes_.end()) {
      continue;
    }
    const int x0 = std::clamp(d.bbox.x, 0, width);
    const int y0 = std::clamp(d.bbox.y, 0, height);
    const int x1 = std::clamp(d.bbox.right(), 0, width);
    const int y1 = std::clamp(d.bbox.bottom(), 0, height);
    if (x1 <= x0 || y1 <= y0) continue;
    d.bbox = {x0, y0, x1 - x0, y1 - y0};
    d.frame_index = image.frame_index;
    out.push_back(std::move(d));
  }
  return out;
}

// --- oracle -----------------------------------------------------------------------

std::vector<BBox> find_blobs(const Frame& image, const Frame& reference,
                             int threshold, int min_area) {
  if (!image.same_shape(reference)) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("image {}x{} vs reference {}x{}", image.width(),
                            image.height(), reference.width(),
                            reference.height()));
  }
  const int w = image.width();
  const int h = image.height();
  std::vector<std::uint8_t> fg(image.size());
  for (std::size_t i = 0; i < fg.size(); ++i) {
    fg[i] = std::abs(int{image.pixels()[i]} - int{reference.pixels()[i]}) >
            threshold;
  }
  std::vector<BBox> boxes;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < fg.size(); ++seed) {
    if (!fg[seed]) continue;
    fg[seed] = 0;
    stack.push_back(seed);
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    int area = 0;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      ++area;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
      auto visit = [&](int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (fg[q]) {
          fg[q] = 0;
          stack.push_back(q);
        }
      };
      visit(x - 1, y);
      visit(x + 1, y);
      visit(x, y - 1);
      visit(x, y + 1);
    }
    if (area >= min_area) boxes.push_back({x0, y0, x1 - x0 + 1, y1 - y0 + 1});
  }
  std::sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) {
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  return boxes;
}

OracleDetector::OracleDetector(const synth::SceneSpec& scene,
                               std::vector<std::string> vehicle_classes)
    : Detector(std::move(vehicle_classes)), reference_(synth::render_base(scene)) {}

std::vector<Detection> OracleDetector::run(const ImageRef& image) {
  Frame loaded;
  const Frame* frame = image.frame;
  if (frame == nullptr) {
    loaded = io::read_frame(image.path);
    frame = &loaded;
  }
  std::vector<Detection> out;
  for (const BBox& b : find_blobs(*frame, reference_, kThreshold, kMinArea)) {
    out.push_back({image.frame_index, "car", 1.0, b});
  }
  return out;
}

// --- precomputed ---------------------------------------------------------------------

PrecomputedDetector::PrecomputedDetector(fs::path directory,
                                         std::vector<std::string> classes)
    : Detector(std::move(classes)), directory_(std::move(directory)) {}

fs::path PrecomputedDetector::detections_path(const fs::path& image) const {
  return directory_ / (image.stem().string() + ".det.jsonl");
}

std::vector<Detection> PrecomputedDetector::run(const ImageRef& image) {
  const fs::path path = detections_path(image.path);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingDetections,
                fmt::format("'{}' not found", path.string()));
  }
  return io::read_detections(path);
}

// --- external process ------------------------------------------------------------------

std::string encode_request(const fs::path& image) {
  nlohmann::json j;
  j["image"] = image.string();
  return j.dump();
}

std::vector<Detection> decode_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolError,
                fmt::format("response is not JSON: {}", e.what()));
  }
  if (!j.is_object() || !j.contains("detections") ||
      !j.at("detections").is_array()) {
    throw Error(ErrorCode::kProtocolError,
                "response must be {\"detections\": [...]}");
  }
  std::vector<Detection> out;
  std::size_t i = 0;
  for (const auto& item : j.at("detections")) {
    try {
      out.push_back(detail::detection_from_json(
          item, /*require_frame=*/false, fmt::format("detection {}", i++)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kProtocolError, e.what());
    }
  }
  return out;
}

class ExternalProcessDetector::Process : public detail::LineProcess {
 public:
  using detail::LineProcess::LineProcess;
};

ExternalProcessDetector::ExternalProcessDetector(std::string command,
                                                 double timeout_s,
                                                 std::vector<std::string> classes)
    : Detector(std::move(classes)),
      command_(std::move(command)),
      timeout_s_(timeout_s) {
  if (command_.empty()) {
    throw Error(ErrorCode::kConfigError, "external detector needs a command");
  }
  if (!(timeout_s_ > 0.0)) {
    throw Error(ErrorCode::kConfigError, "detector timeout must be > 0");
  }
  start();
}

ExternalProcessDetector::~ExternalProcessDetector() = default;

void ExternalProcessDetector::start() {
  process_ = std::make_unique<Process>(command_);
  const auto timeout = std::chrono::milliseconds(
      static_cast<std::int64_t>(std::ceil(timeout_s_ * 1000.0)));
  try {
    process_->write_line(kHandshakeRequest);
    const std::string reply = process_->read_line(timeout);
    const auto j = nlohmann::json::parse(reply, nullptr, /*allow_exceptions=*/false);
    if (!j.is_object() || !j.contains("ready") || j.at("ready") != true) {
      throw Error(ErrorCode::kProtocolError,
                  fmt::format("bad handshake reply '{}'", reply));
    }
  } catch (...) {
    process_.reset();
    throw;
  }
}

std::vector<Detection> ExternalProcessDetector::run(const ImageRef& image) {
  // A detector that timed out or died earlier is relaunched once per request.
  if (!process_) start();
  const auto timeout = std::chrono::milliseconds(
      static_cast<std::int64_t>(std::ceil(timeout_s_ * 1000.0)));
  try {
    process_->write_line(encode_request(image.path));
    return decode_response(process_->read_line(timeout));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDetectorTimeout ||
        e.code() == ErrorCode::kIoError ||
        e.code() == ErrorCode::kProtocolError) {
      // Out of sync with the child: drop it so the next request starts clean.
      process_.reset();
    }
    throw;
  }
}

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec) {
  switch (spec.kind) {
    case DetectorKind::kExternalProcess:
      return std::make_unique<ExternalProcessDetector>(
          spec.command, spec.timeout_s, spec.vehicle_classes);
    case DetectorKind::kPrecomputedFiles:
      return std::make_unique<PrecomputedDetector>(spec.directory,
                                                   spec.vehicle_classes);
    case DetectorKind::kOracleSynthetic:
      return std::make_unique<OracleDetector>(synth::read_scene(spec.scene),
                                              spec.vehicle_classes);
  }
  throw Error(ErrorCode::kConfigError, "unknown detector kind");
}

}  // namespace stallwatch::detect
