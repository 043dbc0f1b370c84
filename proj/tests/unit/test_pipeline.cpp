#include <cstdlib>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "stallwatch/config.hpp"
#include "stallwatch/media_io.hpp"
#include "stallwatch/pipeline.hpp"
#include "stallwatch/synth.hpp"
#include "test_support.hpp"

namespace stallwatch::pipeline {
namespace {

namespace fs = std::filesystem;
using stallwatch::testing::TempDir;

PipelineConfig smoke_config() {
  PipelineConfig c;
  c.window_override_s = 10.0;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      fmt::format("'{}' {} >/dev/null 2>&1", STALLWATCH_CLI, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus_dir_ = new TempDir();
    synth::corpus(synth::Preset::kSmoke, 7, corpus_dir_->path());
  }
  static void TearDownTestSuite() {
    delete corpus_dir_;
    corpus_dir_ = nullptr;
  }
  static const fs::path& corpus() { return corpus_dir_->path(); }

  static TempDir* corpus_dir_;
};

TempDir* Pipeline::corpus_dir_ = nullptr;

TEST_F(Pipeline, DiscoverVideos) {
  const auto videos = discover_videos(corpus());
  ASSERT_EQ(videos.size(), 3u);
  EXPECT_EQ(videos[0].filename(), "smoke_day_stall");
  EXPECT_EQ(videos[2].filename(), "smoke_night_clear");
  EXPECT_EQ(discover_videos(corpus() / "smoke_day_parked").size(), 1u);
  TempDir empty;
  EXPECT_ERROR_CODE(discover_videos(empty.path()), ErrorCode::kMissingMetadata);
  EXPECT_ERROR_CODE(discover_videos(empty / "nope"), ErrorCode::kMissingMetadata);
}

TEST(DetectorSpecFor, ResolvesPerVideo) {
  detect::DetectorSpec s;
  s.kind = detect::DetectorKind::kExternalProcess;
  s.command = "det --scene {video_dir}/scene.json";
  EXPECT_EQ(detector_spec_for(s, "/data/v1").command,
            "det --scene /data/v1/scene.json");
  s.kind = detect::DetectorKind::kOracleSynthetic;
  EXPECT_EQ(detector_spec_for(s, "/data/v1").scene, "/data/v1/scene.json");
  s.kind = detect::DetectorKind::kPrecomputedFiles;
  EXPECT_EQ(detector_spec_for(s, "/data/v1").directory, "/data/v1/detections");
  s.directory = "bg";
  EXPECT_EQ(detector_spec_for(s, "/data/v1").directory, "/data/v1/bg");
}

TEST_F(Pipeline, SmokeEndToEnd) {
  TempDir out;
  const auto r = run_all({corpus(), out.path(), std::nullopt, std::nullopt},
                         smoke_config());
  ASSERT_TRUE(r.score.has_value());
  EXPECT_EQ(r.score->tp, 1);
  EXPECT_EQ(r.score->fp, 0);
  EXPECT_EQ(r.score->fn, 0);
  ASSERT_EQ(r.predictions.size(), 1u);
  EXPECT_EQ(r.predictions[0].video_id, "smoke_day_stall");
  EXPECT_NEAR(r.predictions[0].start, 22.0, 10.0);
  EXPECT_NEAR(r.predictions[0].end, 55.0, 10.0);
  for (const char* f : {"predictions.csv", "score.json", "config.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(io::read_text(out / "manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 7);
  EXPECT_EQ(manifest.at("config_hash"), config_hash(smoke_config()));
  EXPECT_EQ(manifest.at("videos").size(), 3u);
  const auto paths = video_paths(out.path(), "smoke_day_stall");
  EXPECT_TRUE(fs::exists(paths.road_mask()));
  EXPECT_EQ(load_category(paths).lighting, sorting::LightingClass::kDay);
}

TEST_F(Pipeline, StagesMatchRunAll) {
  TempDir all;
  TempDir staged;
  TempDir masks;
  const auto config = smoke_config();
  run_all({corpus(), all.path(), std::nullopt, std::nullopt}, config);
  for (Stage s : {Stage::kSort, Stage::kBackground, Stage::kMask, Stage::kDetect}) {
    run_stage(s, {corpus(), staged.path(), masks.path()}, config);
  }
  EXPECT_EQ(io::read_bytes(staged / "predictions.csv"),
            io::read_bytes(all / "predictions.csv"));
  EXPECT_TRUE(fs::exists(masks / "smoke_day_stall"));
}

TEST_F(Pipeline, DetectWithoutEarlierStagesFails) {
  TempDir out;
  try {
    run_stage(Stage::kDetect, {corpus(), out.path(), std::nullopt}, smoke_config());
    ADD_FAILURE() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "detect");
  }
}

TEST_F(Pipeline, Deterministic) {
  TempDir a;
  TempDir b;
  auto config = smoke_config();
  config.jobs = 2;
  run_all({corpus(), a.path(), std::nullopt, std::nullopt}, config);
  config.jobs = 1;
  run_all({corpus(), b.path(), std::nullopt, std::nullopt}, config);
  EXPECT_EQ(io::read_bytes(a / "predictions.csv"), io::read_bytes(b / "predictions.csv"));
}

TEST_F(Pipeline, ExternalOracleDetector) {
  TempDir out;
  auto config = smoke_config();
  config.detector.kind = detect::DetectorKind::kExternalProcess;
  config.detector.command =
      fmt::format("'{}' '{{video_dir}}/scene.json'", STALLWATCH_ORACLE_DETECTOR);
  const auto r = run_all({corpus() / "smoke_day_stall", out.path(),
                          corpus() / "gt.csv", std::nullopt},
                         config);
  ASSERT_EQ(r.predictions.size(), 1u);
  ASSERT_TRUE(r.score.has_value());
  EXPECT_EQ(r.score->tp, 1);
}

TEST_F(Pipeline, CliExitCodes) {
  TempDir out;
  io::write_text(out / "bad.json", R"({"bogus": 1})");
  EXPECT_EQ(run_cli("frobnicate"), 64);
  EXPECT_EQ(run_cli(""), 64);
  EXPECT_EQ(run_cli(fmt::format("--config '{}' sort -i '{}' -o '{}'",
                                (out / "bad.json").string(), corpus().string(),
                                (out / "o").string())),
            2);
  EXPECT_EQ(run_cli(fmt::format("sort -i '{}' -o '{}'", (out / "none").string(),
                                (out / "o").string())),
            3);

  io::write_text(out / "p.csv", "video_id,start_seconds,end_seconds,confidence\n"
                                "other,1,5,0.5\n");
  EXPECT_EQ(run_cli(fmt::format("score --pred '{}' --gt '{}' -o '{}'",
                                (out / "p.csv").string(),
                                (corpus() / "gt.csv").string(),
                                (out / "s.json").string())),
            0);
  const auto s = nlohmann::json::parse(io::read_text(out / "s.json"));
  EXPECT_EQ(s.at("fp"), 1);
  EXPECT_EQ(s.at("fn"), 1);
  EXPECT_EQ(s.at("f1"), 0.0);
}

TEST_F(Pipeline, CliRunAll) {
  TempDir out;
  io::write_text(out / "c.json", R"({"background": {"window_seconds": 10}})");
  EXPECT_EQ(run_cli(fmt::format("--config '{}' run-all -i '{}' -o '{}'",
                                (out / "c.json").string(), corpus().string(),
                                (out / "run").string())),
            0);
  const auto preds = io::read_predictions(out / "run" / "predictions.csv");
  EXPECT_EQ(preds.size(), 1u);
}

}  // namespace
}  // namespace stallwatch::pipeline
