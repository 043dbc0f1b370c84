// Line-protocol detector backed by the synthetic oracle.
//
//   stallwatch_oracle_detector <scene.json>
//
// Answers the handshake, then one {"image": path} request per line.

#include <iostream>
#include <string>

#include <json.hpp>

#include "stallwatch/detector.hpp"
#include "stallwatch/error.hpp"
#include "stallwatch/media_io.hpp"
#include "stallwatch/synth.hpp"

using namespace stallwatch;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: stallwatch_oracle_detector <scene.json>\n";
    return 64;
  }
  std::ios::sync_with_stdio(false);
  try {
    const synth::SceneSpec scene = synth::read_scene(argv[1]);
    const Frame reference = synth::render_base(scene);
    std::string line;
    while (std::getline(std::cin, line)) {
      const auto request = nlohmann::json::parse(line, nullptr, false);
      nlohmann::json reply;
      if (request.is_object() && request.contains("handshake")) {
        reply["ready"] = true;
      } else if (request.is_object() && request.contains("image") &&
                 request["image"].is_string()) {
        const Frame image = io::read_frame(request["image"].get<std::string>());
        reply["detections"] = nlohmann::json::array();
        for (const BBox& b :
             detect::find_blobs(image, reference, detect::OracleDetector::kThreshold,
                                detect::OracleDetector::kMinArea)) {
          reply["detections"].push_back(
              {{"class", "car"}, {"score", 1.0}, {"bbox", {b.x, b.y, b.w, b.h}}});
        }
      } else {
        reply["error"] = "unrecognised request";
      }
      std::cout << reply.dump() << std::endl;
    }
  } catch (const Error& e) {
    std::cerr << "stallwatch_oracle_detector: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
