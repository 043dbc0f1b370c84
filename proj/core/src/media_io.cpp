#include "stallwatch/media_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "json_records.hpp"
#include "stallwatch/error.hpp"

namespace stallwatch::io {

using nlohmann::json;

// --- file helpers ----------------------------------------------------------

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError,
                fmt::format("cannot open '{}' for reading", path.string()));
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError,
                fmt::format("cannot open '{}' for reading", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError,
                fmt::format("cannot open '{}' for writing", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::kIoError,
                fmt::format("short write to '{}'", path.string()));
  }
}

void write_text(const fs::path& path, std::string_view text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

// --- PGM -------------------------------------------------------------------

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (is_space(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    std::uint64_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      ++pos_;
      if (++digits > 9) {
        throw Error(ErrorCode::kParseError,
                    fmt::format("PGM {} has too many digits", what));
      }
    }
    if (digits == 0) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("PGM header: expected {}", what));
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw Error(ErrorCode::kParseError,
                  "PGM header: missing whitespace before raster");
    }
    ++pos_;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f';
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

struct PgmHeader {
  int width;
  int height;
  std::size_t data_offset;
};

PgmHeader parse_pgm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorCode::kParseError, "not a binary PGM (magic 'P5')");
  }
  HeaderReader reader(bytes);
  const auto width = reader.number("width");
  const auto height = reader.number("height");
  const auto maxval = reader.number("maxval");
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::kParseError, "PGM dimensions must be positive");
  }
  if (maxval == 0 || maxval > 65535) {
    throw Error(ErrorCode::kParseError,
                fmt::format("PGM maxval {} out of range", maxval));
  }
  if (maxval != 255) {
    throw Error(ErrorCode::kUnsupportedFormat,
                fmt::format("PGM maxval {} (only 255 is supported)", maxval));
  }
  reader.single_space();
  return {static_cast<int>(width), static_cast<int>(height),
          reader.position()};
}

}  // namespace

Frame parse_pgm(std::span<const std::uint8_t> bytes) {
  const PgmHeader header = parse_pgm_header(bytes);
  const std::uint64_t need =
      static_cast<std::uint64_t>(header.width) * header.height;
  if (bytes.size() - header.data_offset < need) {
    throw Error(ErrorCode::kParseError,
                fmt::format("PGM raster truncated: {} of {} bytes",
                            bytes.size() - header.data_offset, need));
  }
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(header.data_offset);
  std::vector<std::uint8_t> pixels(first,
                                   first + static_cast<std::ptrdiff_t>(need));
  return Frame(header.width, header.height, std::move(pixels));
}

std::vector<std::uint8_t> encode_pgm(const Frame& frame) {
  const std::string header =
      fmt::format("P5\n{} {}\n255\n", frame.width(), frame.height());
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + frame.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
  return out;
}

Frame read_frame(const fs::path& path) {
  try {
    return parse_pgm(read_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_frame(const Frame& frame, const fs::path& path) {
  if (frame.empty()) {
    throw Error(ErrorCode::kInvalidParam, "cannot write an empty frame");
  }
  write_bytes(path, encode_pgm(frame));
}

std::pair<int, int> read_pgm_dimensions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError,
                fmt::format("cannot open '{}' for reading", path.string()));
  }
  std::vector<std::uint8_t> head(512);
  in.read(reinterpret_cast<char*>(head.data()),
          static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const PgmHeader header = parse_pgm_header(head);
  return {header.width, header.height};
}

// --- sequences ---------------------------------------------------------------

std::string frame_file_name(std::int64_t index) {
  return fmt::format("frame_{:06d}.pgm", index);
}

SequenceMeta read_meta(const fs::path& meta_path) {
  if (!fs::exists(meta_path)) {
    throw Error(ErrorCode::kMissingMetadata,
                fmt::format("'{}' not found", meta_path.string()));
  }
  json j;
  try {
    j = json::parse(read_text(meta_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{}: {}", meta_path.string(), e.what()));
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kParseError, "meta.json must be an object");
  }
  for (const char* key : {"video_id", "fps", "width", "height", "frame_count"}) {
    if (!j.contains(key)) {
      throw Error(ErrorCode::kMissingMetadata,
                  fmt::format("meta.json lacks \"{}\"", key));
    }
  }
  SequenceMeta meta;
  try {
    meta.video_id = j.at("video_id").get<std::string>();
    meta.fps = j.at("fps").get<double>();
    meta.width = j.at("width").get<int>();
    meta.height = j.at("height").get<int>();
    meta.frame_count = j.at("frame_count").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{}: {}", meta_path.string(), e.what()));
  }
  if (!(meta.fps > 0.0) || !std::isfinite(meta.fps) || meta.width <= 0 ||
      meta.height <= 0 || meta.frame_count < 0 || meta.video_id.empty()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{}: invalid field values", meta_path.string()));
  }
  return meta;
}

void write_meta(const SequenceMeta& meta, const fs::path& meta_path) {
  nlohmann::ordered_json j;
  j["video_id"] = meta.video_id;
  j["fps"] = meta.fps;
  j["width"] = meta.width;
  j["height"] = meta.height;
  j["frame_count"] = meta.frame_count;
  write_text(meta_path, j.dump(2) + "\n");
}

namespace {

// Returns the frame index encoded in `name`, or -1 when it is not a frame file.
std::int64_t frame_index_of(const std::string& name) {
  constexpr std::string_view kPrefix = "frame_";
  constexpr std::string_view kSuffix = ".pgm";
  if (name.size() < kPrefix.size() + kSuffix.size() + 6 ||
      !name.starts_with(kPrefix) || !name.ends_with(kSuffix)) {
    return -1;
  }
  const std::string_view digits(name.data() + kPrefix.size(),
                                name.size() - kPrefix.size() - kSuffix.size());
  std::int64_t value = -1;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return -1;
  return value;
}

}  // namespace

FrameSequence FrameSequence::open(const fs::path& dir) {
  SequenceMeta meta = read_meta(dir / "meta.json");
  std::vector<std::int64_t> indices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::int64_t idx = frame_index_of(entry.path().filename().string());
    if (idx >= 0) indices.push_back(idx);
  }
  std::sort(indices.begin(), indices.end());
  for (std::int64_t i = 0; i < meta.frame_count; ++i) {
    if (static_cast<std::size_t>(i) >= indices.size() ||
        indices[static_cast<std::size_t>(i)] != i) {
      throw Error(ErrorCode::kSequenceGap,
                  fmt::format("{}: frame {} missing", dir.string(), i));
    }
  }
  if (indices.size() != static_cast<std::size_t>(meta.frame_count)) {
    throw Error(ErrorCode::kSequenceGap,
                fmt::format("{}: {} frame files but frame_count is {}",
                            dir.string(), indices.size(), meta.frame_count));
  }
  return FrameSequence(dir, std::move(meta));
}

fs::path FrameSequence::frame_path(std::int64_t index) const {
  return dir_ / frame_file_name(index);
}

Frame FrameSequence::frame(std::int64_t index) const {
  if (index < 0 || index >= meta_.frame_count) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("frame {} outside [0, {})", index,
                            meta_.frame_count));
  }
  Frame f = read_frame(frame_path(index));
  if (f.width() != meta_.width || f.height() != meta_.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("frame {} is {}x{}, meta says {}x{}", index,
                            f.width(), f.height(), meta_.width, meta_.height));
  }
  return f;
}

// --- detections ---------------------------------------------------------------

std::string format_detection(const Detection& d) {
  nlohmann::ordered_json j;
  j["frame"] = d.frame_index;
  j["class"] = d.class_label;
  j["score"] = d.score;
  j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
  return j.dump();
}

Detection parse_detection(std::string_view line, std::size_t line_number) {
  const std::string where = fmt::format("line {}", line_number);
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: {}", where, e.what()));
  }
  return detail::detection_from_json(j, /*require_frame=*/true, where);
}

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{}
                                        : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, line_no);
  }
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace

std::vector<Detection> parse_detections(std::string_view text) {
  std::vector<Detection> out;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    if (is_blank(line)) return;
    out.push_back(parse_detection(line, no));
  });
  return out;
}

std::vector<Detection> read_detections(const fs::path& path) {
  try {
    return parse_detections(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_detections(std::span<const Detection> detections,
                      const fs::path& path) {
  std::string out;
  for (const auto& d : detections) {
    out += format_detection(d);
    out += '\n';
  }
  write_text(path, out);
}

// --- CSV -----------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() ||
      ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::kParseError,
                fmt::format("line {}: '{}' is not a number", line_no, field));
  }
  return value;
}

void check_video_id(std::string_view id, std::size_t line_no) {
  if (id.empty()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("line {}: empty video_id", line_no));
  }
}

void check_writable_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\r\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("video_id '{}' cannot be written to CSV", id));
  }
}

template <typename Row, typename MakeRow>
std::vector<Row> parse_csv(std::string_view text, std::string_view header,
                           std::size_t columns, MakeRow&& make_row) {
  std::vector<Row> rows;
  bool seen_header = false;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    if (is_blank(line)) return;
    if (!seen_header) {
      if (line != header) {
        throw Error(ErrorCode::kParseError,
                    fmt::format("line {}: expected header '{}'", no, header));
      }
      seen_header = true;
      return;
    }
    auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("line {}: expected {} fields, got {}", no,
                              columns, fields.size()));
    }
    rows.push_back(make_row(fields, no));
  });
  if (!seen_header) {
    throw Error(ErrorCode::kParseError,
                fmt::format("missing header '{}'", header));
  }
  return rows;
}

}  // namespace

std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text) {
  return parse_csv<GroundTruthEntry>(
      text, kGroundTruthHeader, 3,
      [](const std::vector<std::string_view>& f, std::size_t no) {
        check_video_id(f[0], no);
        GroundTruthEntry e{std::string(f[0]), parse_number(f[1], no),
                           parse_number(f[2], no)};
        if (e.start < 0.0 || !(e.end > e.start)) {
          throw Error(ErrorCode::kInvalidInterval,
                      fmt::format("line {}: interval [{}, {}] is invalid", no,
                                  e.start, e.end));
        }
        return e;
      });
}

std::vector<GroundTruthEntry> read_ground_truth(const fs::path& path) {
  try {
    return parse_ground_truth(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_ground_truth(std::span<const GroundTruthEntry> entries) {
  std::string out(kGroundTruthHeader);
  out += '\n';
  for (const auto& e : entries) {
    check_writable_id(e.video_id);
    out += fmt::format("{},{},{}\n", e.video_id, e.start, e.end);
  }
  return out;
}

void write_ground_truth(std::span<const GroundTruthEntry> entries,
                        const fs::path& path) {
  write_text(path, format_ground_truth(entries));
}

std::vector<Prediction> parse_predictions(std::string_view text) {
  return parse_csv<Prediction>(
      text, kPredictionHeader, 4,
      [](const std::vector<std::string_view>& f, std::size_t no) {
        check_video_id(f[0], no);
        Prediction p{std::string(f[0]), parse_number(f[1], no),
                     parse_number(f[2], no), parse_number(f[3], no)};
        if (p.start < 0.0 || !(p.end > p.start)) {
          throw Error(ErrorCode::kInvalidInterval,
                      fmt::format("line {}: interval [{}, {}] is invalid", no,
                                  p.start, p.end));
        }
        if (p.confidence < 0.0 || p.confidence > 1.0) {
          throw Error(ErrorCode::kParseError,
                      fmt::format("line {}: confidence {} outside [0,1]", no,
                                  p.confidence));
        }
        return p;
      });
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  try {
    return parse_predictions(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_predictions(std::span<const Prediction> predictions) {
  std::string out(kPredictionHeader);
  out += '\n';
  for (const auto& p : predictions) {
    check_writable_id(p.video_id);
    out += fmt::format("{},{},{},{}\n", p.video_id, p.start, p.end,
                       p.confidence);
  }
  return out;
}

void write_predictions(std::span<const Prediction> predictions,
                       const fs::path& path) {
  write_text(path, format_predictions(predictions));
}

}  // namespace stallwatch::io
