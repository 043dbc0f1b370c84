#include "stallwatch/types.hpp"

#include <fmt/format.h>

#include "stallwatch/error.hpp"

namespace stallwatch {

Frame::Frame(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("frame dimensions {}x{} must be positive", width,
                            height));
  }
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidParam,
                fmt::format("frame dimensions {}x{} must be positive", width,
                            height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} pixels supplied for a {}x{} frame",
                            pixels_.size(), width, height));
  }
}

}  // namespace stallwatch
