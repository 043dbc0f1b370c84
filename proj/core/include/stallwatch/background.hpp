#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stallwatch/media_io.hpp"
#include "stallwatch/types.hpp"

namespace stallwatch::background {

// Half-open frame range [first_frame, end_frame) with its time span.
struct Window {
  std::int64_t first_frame = 0;
  std::int64_t end_frame = 0;
  double start_s = 0.0;
  double end_s = 0.0;

  std::int64_t size() const noexcept { return end_frame - first_frame; }
  std::int64_t start_ms() const;

  friend bool operator==(const Window&, const Window&) = default;
};

struct BackgroundFrame {
  Frame frame;
  Window window;
  std::vector<std::int64_t> sampled_indices;
};

inline constexpr double kDefaultSampleFraction = 0.10;
// A trailing window shorter than this share of the nominal length is folded
// into its predecessor.
inline constexpr double kMinTailFraction = 0.10;

// ceil(fraction * count) distinct indices from [first, first + count),
// ascending. Deterministic for a given seed.
std::vector<std::int64_t> sample_indices(std::int64_t first, std::int64_t count,
                                         double fraction, std::uint64_t seed);

// Per-pixel median; for an even count the lower-middle order statistic.
Frame median_frame(std::span<const Frame> frames);

std::vector<Window> partition_windows(std::int64_t frame_count, double fps,
                                      double window_s);

std::vector<BackgroundFrame> background_stream(const io::FrameSequence& seq,
                                               double window_s,
                                               double fraction,
                                               std::uint64_t global_seed);

std::string background_file_name(const Window& window);

// Writes bg_{window_start_ms}.pgm per window plus index.json.
void write_backgrounds(const std::string& video_id,
                       std::span<const BackgroundFrame> backgrounds,
                       const std::filesystem::path& dir);
std::vector<BackgroundFrame> read_backgrounds(const std::filesystem::path& dir);

}  // namespace stallwatch::background
