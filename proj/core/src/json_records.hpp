#pragma once

#include <cmath>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "stallwatch/error.hpp"
#include "stallwatch/types.hpp"

namespace stallwatch::detail {

using json = nlohmann::json;

inline int bbox_component(const json& v, const std::string& where) {
  if (!v.is_number()) {
    throw Error(ErrorCode::kParseError, where + ": bbox entries must be numbers");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d) || std::fabs(d) > 1e9) {
    throw Error(ErrorCode::kParseError, where + ": bbox entry out of range");
  }
  return static_cast<int>(std::lround(d));
}

// Shared by the JSONL reader and the detector wire protocol. The protocol
// omits "frame", so it is only required when `require_frame` is set.
inline Detection detection_from_json(const json& obj, bool require_frame,
                                     const std::string& where) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kParseError, where + ": expected a JSON object");
  }
  Detection d;
  if (require_frame) {
    auto it = obj.find("frame");
    if (it == obj.end() || !it->is_number_integer() ||
        it->get<std::int64_t>() < 0) {
      throw Error(ErrorCode::kParseError,
                  where + ": \"frame\" must be a non-negative integer");
    }
    d.frame_index = it->get<std::int64_t>();
  }
  auto cls = obj.find("class");
  if (cls == obj.end() || !cls->is_string()) {
    throw Error(ErrorCode::kParseError, where + ": \"class\" must be a string");
  }
  d.class_label = cls->get<std::string>();
  auto score = obj.find("score");
  if (score == obj.end() || !score->is_number()) {
    throw Error(ErrorCode::kParseError, where + ": \"score\" must be a number");
  }
  d.score = score->get<double>();
  if (!(d.score >= 0.0 && d.score <= 1.0)) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{}: score {} outside [0,1]", where, d.score));
  }
  auto box = obj.find("bbox");
  if (box == obj.end() || !box->is_array() || box->size() != 4) {
    throw Error(ErrorCode::kParseError,
                where + ": \"bbox\" must be an array [x, y, w, h]");
  }
  d.bbox = BBox{bbox_component((*box)[0], where),
                bbox_component((*box)[1], where),
                bbox_component((*box)[2], where),
                bbox_component((*box)[3], where)};
  if (!d.bbox.valid()) {
    throw Error(ErrorCode::kInvalidBBox,
                fmt::format("{}: bbox [{}, {}, {}, {}] must have x,y >= 0 and "
                            "w,h > 0",
                            where, d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h));
  }
  return d;
}

}  // namespace stallwatch::detail
