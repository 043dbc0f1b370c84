#include "stallwatch/background.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "stallwatch/error.hpp"
#include "stallwatch/hashing.hpp"

namespace stallwatch::background {

std::int64_t Window::start_ms() const { return std::llround(start_s * 1000.0); }

std::vector<std::int64_t> sample_indices(std::int64_t first, std::int64_t count,
                                         double fraction, std::uint64_t seed) {
  if (count <= 0) {
    throw Error(ErrorCode::kEmptyInput, "cannot sample from an empty window");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("sample fraction {} outside (0,1]", fraction));
  }
  // The epsilon keeps products such as 0.1 * 900 from rounding up to 91.
  auto k = static_cast<std::int64_t>(
      std::ceil(fraction * static_cast<double>(count) - 1e-9));
  k = std::clamp<std::int64_t>(k, 1, count);

  // Floyd's algorithm: k distinct values from [0, count).
  Rng rng(seed);
  std::set<std::int64_t> chosen;
  for (std::int64_t j = count - k; j < count; ++j) {
    const auto t = static_cast<std::int64_t>(
        rng.below(static_cast<std::uint64_t>(j) + 1));
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::int64_t> out;
  out.reserve(chosen.size());
  for (std::int64_t v : chosen) out.push_back(first + v);
  return out;
}

Frame median_frame(std::span<const Frame> frames) {
  if (frames.empty()) {
    throw Error(ErrorCode::kEmptyInput, "median of zero frames");
  }
  const Frame& ref = frames.front();
  for (const Frame& f : frames) {
    if (!f.same_shape(ref)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("median input mixes {}x{} and {}x{} frames",
                              ref.width(), ref.height(), f.width(),
                              f.height()));
    }
  }
  const std::size_t n = frames.size();
  const std::size_t rank = (n - 1) / 2;
  Frame out(ref.width(), ref.height());
  auto dst = out.pixels();
  std::vector<const std::uint8_t*> src;
  src.reserve(n);
  for (const Frame& f : frames) src.push_back(f.pixels().data());

  std::vector<std::uint8_t> column(n);
  for (std::size_t p = 0; p < dst.size(); ++p) {
    for (std::size_t k = 0; k < n; ++k) column[k] = src[k][p];
    std::nth_element(column.begin(),
                     column.begin() + static_cast<std::ptrdiff_t>(rank),
                     column.end());
    dst[p] = column[rank];
  }
  return out;
}

std::vector<Window> partition_windows(std::int64_t frame_count, double fps,
                                      double window_s) {
  if (!(fps > 0.0) || !(window_s > 0.0)) {
    throw Error(ErrorCode::kInvalidParam, "fps and window length must be > 0");
  }
  if (static_cast<double>(frame_count) < fps) {
    throw Error(ErrorCode::kVideoTooShort,
                fmt::format("{} frames at {} fps is shorter than 1 s",
                            frame_count, fps));
  }
  const auto nominal = std::max<std::int64_t>(1, std::llround(window_s * fps));
  std::vector<Window> windows;
  for (std::int64_t first = 0; first < frame_count; first += nominal) {
    const std::int64_t end = std::min(frame_count, first + nominal);
    const bool short_tail =
        static_cast<double>(end - first) <
        kMinTailFraction * static_cast<double>(nominal);
    if (short_tail && !windows.empty()) {
      windows.back().end_frame = end;
      windows.back().end_s = static_cast<double>(end) / fps;
      break;
    }
    windows.push_back({first, end, static_cast<double>(first) / fps,
                       static_cast<double>(end) / fps});
  }
  return windows;
}

std::vector<BackgroundFrame> background_stream(const io::FrameSequence& seq,
                                               double window_s,
                                               double fraction,
                                               std::uint64_t global_seed) {
  const auto windows = partition_windows(seq.frame_count(), seq.fps(), window_s);
  std::vector<BackgroundFrame> out;
  out.reserve(windows.size());
  for (const Window& w : windows) {
    auto indices =
        sample_indices(w.first_frame, w.size(), fraction,
                       derive_seed(global_seed, seq.video_id(), w.start_ms()));
    std::vector<Frame> frames;
    frames.reserve(indices.size());
    for (std::int64_t i : indices) frames.push_back(seq.frame(i));
    out.push_back({median_frame(frames), w, std::move(indices)});
  }
  return out;
}

std::string background_file_name(const Window& window) {
  return fmt::format("bg_{}.pgm", window.start_ms());
}

void write_backgrounds(const std::string& video_id,
                       std::span<const BackgroundFrame> backgrounds,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json index;
  index["video_id"] = video_id;
  index["windows"] = nlohmann::ordered_json::array();
  for (const auto& bg : backgrounds) {
    const std::string name = background_file_name(bg.window);
    io::write_frame(bg.frame, dir / name);
    nlohmann::ordered_json w;
    w["file"] = name;
    w["window_start_s"] = bg.window.start_s;
    w["window_end_s"] = bg.window.end_s;
    w["first_frame"] = bg.window.first_frame;
    w["end_frame"] = bg.window.end_frame;
    w["sampled_indices"] = bg.sampled_indices;
    index["windows"].push_back(std::move(w));
  }
  io::write_text(dir / "index.json", index.dump(2) + "\n");
}

std::vector<BackgroundFrame> read_backgrounds(const std::filesystem::path& dir) {
  const auto index_path = dir / "index.json";
  if (!std::filesystem::exists(index_path)) {
    throw Error(ErrorCode::kMissingMetadata,
                fmt::format("'{}' not found", index_path.string()));
  }
  std::vector<BackgroundFrame> out;
  try {
    const auto index = nlohmann::json::parse(io::read_text(index_path));
    for (const auto& w : index.at("windows")) {
      BackgroundFrame bg;
      bg.window.start_s = w.at("window_start_s").get<double>();
      bg.window.end_s = w.at("window_end_s").get<double>();
      bg.window.first_frame = w.at("first_frame").get<std::int64_t>();
      bg.window.end_frame = w.at("end_frame").get<std::int64_t>();
      bg.sampled_indices =
          w.at("sampled_indices").get<std::vector<std::int64_t>>();
      bg.frame = io::read_frame(dir / w.at("file").get<std::string>());
      out.push_back(std::move(bg));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{}: {}", index_path.string(), e.what()));
  }
  return out;
}

}  // namespace stallwatch::background
