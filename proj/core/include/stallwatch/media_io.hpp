#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stallwatch/types.hpp"

namespace stallwatch::io {

namespace fs = std::filesystem;

// --- Frames (binary PGM, maxval 255) -------------------------------------

Frame parse_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const Frame& frame);

Frame read_frame(const fs::path& path);
void write_frame(const Frame& frame, const fs::path& path);

// Reads only the header; used where dimensions are needed without pixels.
std::pair<int, int> read_pgm_dimensions(const fs::path& path);

// --- Frame sequences -----------------------------------------------------

struct SequenceMeta {
  std::string video_id;
  double fps = 0.0;
  int width = 0;
  int height = 0;
  std::int64_t frame_count = 0;

  friend bool operator==(const SequenceMeta&, const SequenceMeta&) = default;
};

std::string frame_file_name(std::int64_t index);
SequenceMeta read_meta(const fs::path& meta_path);
void write_meta(const SequenceMeta& meta, const fs::path& meta_path);

// Directory of `meta.json` plus `frame_NNNNNN.pgm` files. Frames are loaded
// on demand; the object itself is immutable and may be shared across threads.
class FrameSequence {
 public:
  static FrameSequence open(const fs::path& dir);

  const SequenceMeta& meta() const noexcept { return meta_; }
  const std::string& video_id() const noexcept { return meta_.video_id; }
  double fps() const noexcept { return meta_.fps; }
  int width() const noexcept { return meta_.width; }
  int height() const noexcept { return meta_.height; }
  std::int64_t frame_count() const noexcept { return meta_.frame_count; }
  bool empty() const noexcept { return meta_.frame_count == 0; }
  const fs::path& directory() const noexcept { return dir_; }

  double timestamp(std::int64_t index) const noexcept {
    return static_cast<double>(index) / meta_.fps;
  }
  double duration() const noexcept {
    return static_cast<double>(meta_.frame_count) / meta_.fps;
  }

  fs::path frame_path(std::int64_t index) const;
  Frame frame(std::int64_t index) const;

 private:
  FrameSequence(fs::path dir, SequenceMeta meta)
      : dir_(std::move(dir)), meta_(std::move(meta)) {}

  fs::path dir_;
  SequenceMeta meta_;
};

// --- Detection records (JSON Lines) --------------------------------------

std::string format_detection(const Detection& d);
// `line_number` is only used in error messages.
Detection parse_detection(std::string_view line, std::size_t line_number = 1);

std::vector<Detection> parse_detections(std::string_view text);
std::vector<Detection> read_detections(const fs::path& path);
void write_detections(std::span<const Detection> detections,
                      const fs::path& path);

// --- Ground truth and predictions (CSV) ----------------------------------

inline constexpr std::string_view kGroundTruthHeader =
    "video_id,start_seconds,end_seconds";
inline constexpr std::string_view kPredictionHeader =
    "video_id,start_seconds,end_seconds,confidence";

std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text);
std::vector<GroundTruthEntry> read_ground_truth(const fs::path& path);
std::string format_ground_truth(std::span<const GroundTruthEntry> entries);
void write_ground_truth(std::span<const GroundTruthEntry> entries,
                        const fs::path& path);

std::vector<Prediction> parse_predictions(std::string_view text);
std::vector<Prediction> read_predictions(const fs::path& path);
std::string format_predictions(std::span<const Prediction> predictions);
void write_predictions(std::span<const Prediction> predictions,
                       const fs::path& path);

// --- Small file helpers ---------------------------------------------------

std::vector<std::uint8_t> read_bytes(const fs::path& path);
std::string read_text(const fs::path& path);
void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, std::string_view text);

}  // namespace stallwatch::io
