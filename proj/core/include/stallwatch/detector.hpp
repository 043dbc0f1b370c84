#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stallwatch/synth.hpp"
#include "stallwatch/types.hpp"

namespace stallwatch::detect {

namespace fs = std::filesystem;

enum class DetectorKind { kExternalProcess, kOracleSynthetic, kPrecomputedFiles };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view text);

struct DetectorSpec {
  DetectorKind kind = DetectorKind::kOracleSynthetic;
  // ExternalProcess: shell command line of the detector wrapper.
  std::string command;
  // PrecomputedFiles: directory holding <frame_stem>.det.jsonl files.
  fs::path directory;
  // OracleSynthetic: scene.json of the synthetic video.
  fs::path scene;
  double timeout_s = 30.0;
  std::vector<std::string> vehicle_classes{"car", "truck", "bus"};
};

// An image handed to a detector. `frame` may be supplied when the pixels are
// already in memory; `path` must always name the image on disk.
struct ImageRef {
  fs::path path;
  const Frame* frame = nullptr;
  std::int64_t frame_index = 0;
};

class Detector {
 public:
  explicit Detector(std::vector<std::string> vehicle_classes)
      : vehicle_classes_(std::move(vehicle_classes)) {}
  virtual ~Detector() = default;

  virtual DetectorKind kind() const noexcept = 0;

  // Raw detections filtered to the vehicle classes and clipped to the image.
  std::vector<Detection> detect(const ImageRef& image);

 protected:
  virtual std::vector<Detection> run(const ImageRef& image) = 0;

 private:
  std::vector<std::string> vehicle_classes_;
};

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec);

// --- oracle ---------------------------------------------------------------------

// Bounding boxes of 4-connected regions where |image - reference| exceeds
// `threshold`, ignoring regions smaller than `min_area` pixels. Sorted by
// (y, x).
std::vector<BBox> find_blobs(const Frame& image, const Frame& reference,
                             int threshold, int min_area);

class OracleDetector final : public Detector {
 public:
  static constexpr int kThreshold = 30;
  static constexpr int kMinArea = 20;

  OracleDetector(const synth::SceneSpec& scene,
                 std::vector<std::string> vehicle_classes = {"car"});

  DetectorKind kind() const noexcept override {
    return DetectorKind::kOracleSynthetic;
  }

 protected:
  std::vector<Detection> run(const ImageRef& image) override;

 private:
  Frame reference_;
};

// --- precomputed -----------------------------------------------------------------

class PrecomputedDetector final : public Detector {
 public:
  PrecomputedDetector(fs::path directory, std::vector<std::string> classes);

  DetectorKind kind() const noexcept override {
    return DetectorKind::kPrecomputedFiles;
  }
  fs::path detections_path(const fs::path& image) const;

 protected:
  std::vector<Detection> run(const ImageRef& image) override;

 private:
  fs::path directory_;
};

// --- external process --------------------------------------------------------------

inline constexpr std::string_view kHandshakeRequest =
    R"({"handshake":"stallwatch/1"})";

std::string encode_request(const fs::path& image);
// Parses one response line; throws ProtocolError on anything malformed.
std::vector<Detection> decode_response(std::string_view line);

class ExternalProcessDetector final : public Detector {
 public:
  ExternalProcessDetector(std::string command, double timeout_s,
                          std::vector<std::string> classes);
  ~ExternalProcessDetector() override;

  DetectorKind kind() const noexcept override {
    return DetectorKind::kExternalProcess;
  }

 protected:
  std::vector<Detection> run(const ImageRef& image) override;

 private:
  class Process;
  void start();

  std::string command_;
  double timeout_s_;
  std::unique_ptr<Process> process_;
};

}  // namespace stallwatch::detect
