#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stallwatch/config.hpp"
#include "stallwatch/error.hpp"
#include "stallwatch/media_io.hpp"
#include "stallwatch/pipeline.hpp"
#include "stallwatch/scoring.hpp"
#include "stallwatch/synth.hpp"

namespace fs = std::filesystem;
using namespace stallwatch;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitUsage = 64;

struct MissingInput {
  std::string what;
};

void require_exists(const fs::path& path, const char* what) {
  if (!fs::exists(path)) {
    throw MissingInput{fmt::format("{} '{}' does not exist", what, path.string())};
  }
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stalled-vehicle anomaly detection over frame sequences", "stallwatch"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool dump_config = false;
  std::string log_level = "warn";
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Global seed (overrides the config)");
  app.add_option("--jobs", jobs, "Worker threads (overrides the config)");
  app.add_flag("--dump-config", dump_config, "Print the effective configuration");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  std::string input;
  std::string out;
  std::string mask_out;
  std::string gt;
  std::string pred;
  std::string preset;
  std::string scene;

  auto add_io = [&](CLI::App* sub, bool with_masks) {
    sub->add_option("-i,--input", input, "Video or corpus directory")->required();
    sub->add_option("-o,--out", out, "Output directory")->required();
    if (with_masks) {
      sub->add_option("--mask-out", mask_out, "Also copy road masks here");
    }
  };
  auto* sort_cmd = app.add_subcommand("sort", "Classify lighting and road type");
  add_io(sort_cmd, false);
  auto* bg_cmd = app.add_subcommand("background", "Estimate per-window backgrounds");
  add_io(bg_cmd, false);
  auto* mask_cmd = app.add_subcommand("mask", "Compute road masks");
  add_io(mask_cmd, true);
  auto* detect_cmd = app.add_subcommand("detect", "Detect and localize stalls");
  add_io(detect_cmd, false);

  auto* score_cmd = app.add_subcommand("score", "Score predictions against ground truth");
  score_cmd->add_option("--pred", pred, "Predictions CSV")->required();
  score_cmd->add_option("--gt", gt, "Ground-truth CSV")->required();
  score_cmd->add_option("-o,--out", out, "Write the JSON report here");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus or video");
  synth_cmd->add_option("--preset", preset, "standard, smoke or no-stall");
  synth_cmd->add_option("--scene", scene, "Scene JSON for a single video");
  synth_cmd->add_option("-o,--out", out, "Output directory")->required();

  auto* run_cmd = app.add_subcommand("run-all", "Run every stage and score");
  add_io(run_cmd, true);
  run_cmd->add_option("--gt", gt, "Ground-truth CSV (default: <input>/gt.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "stallwatch: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("stallwatch"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  pipeline::PipelineConfig config;
  try {
    if (!config_path.empty()) config = pipeline::load_config(config_path);
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    config.validate();
  } catch (const Error& e) {
    std::cerr << "stallwatch: " << e.what() << "\n";
    return kExitConfig;
  }

  if (dump_config) {
    std::cout << pipeline::config_to_json(config);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (sort_cmd->parsed() || bg_cmd->parsed() || mask_cmd->parsed() ||
        detect_cmd->parsed()) {
      require_exists(input, "input");
      pipeline::Stage stage = pipeline::Stage::kSort;
      if (bg_cmd->parsed()) stage = pipeline::Stage::kBackground;
      if (mask_cmd->parsed()) stage = pipeline::Stage::kMask;
      if (detect_cmd->parsed()) stage = pipeline::Stage::kDetect;
      pipeline::run_stage(stage, {input, out, optional_path(mask_out)}, config);
    } else if (score_cmd->parsed()) {
      require_exists(pred, "predictions");
      require_exists(gt, "ground truth");
      const auto report = pipeline::run_score(pred, gt, config);
      const std::string json = scoring::report_to_json(report);
      if (out.empty()) {
        std::cout << json;
      } else {
        io::write_text(out, json);
      }
    } else if (synth_cmd->parsed()) {
      if (preset.empty() == scene.empty()) {
        std::cerr << "stallwatch: synth needs exactly one of --preset, --scene\n";
        return kExitUsage;
      }
      if (!scene.empty()) require_exists(scene, "scene");
      try {
        if (!scene.empty()) {
          synth::generate(synth::read_scene(scene), out);
        } else {
          const auto result =
              synth::corpus(synth::parse_preset(preset), config.seed, out);
          std::cout << fmt::format("{} videos, {} ground-truth rows\n",
                                   result.video_ids.size(),
                                   result.ground_truth.size());
        }
      } catch (const Error& e) {
        throw pipeline::StageError("synth", e);
      }
    } else if (run_cmd->parsed()) {
      require_exists(input, "input");
      if (!gt.empty()) require_exists(gt, "ground truth");
      const auto result = pipeline::run_all(
          {input, out, optional_path(gt), optional_path(mask_out)}, config);
      std::cout << fmt::format("{} predictions\n", result.predictions.size());
      if (result.score) std::cout << scoring::report_to_json(*result.score);
    }
  } catch (const MissingInput& e) {
    std::cerr << "stallwatch: " << e.what << "\n";
    return kExitMissingInput;
  } catch (const pipeline::StageError& e) {
    std::cerr << "stallwatch: " << e.what() << "\n";
    if (e.code() == ErrorCode::kMissingMetadata ||
        e.code() == ErrorCode::kMissingDetections) {
      return kExitMissingInput;
    }
    return 1;
  } catch (const Error& e) {
    std::cerr << "stallwatch: " << e.what() << "\n";
    if (e.code() == ErrorCode::kConfigError) return kExitConfig;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "stallwatch: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
