#include <fstream>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>

#include "cli.hpp"
#include "elemgrasp/dataset.hpp"
#include "elemgrasp/decomposer_model.hpp"
#include "elemgrasp/eval.hpp"
#include "elemgrasp/graspnet_model.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace elemgrasp;
using namespace elemgrasp::cli;
using namespace elemgrasp::testkit;

namespace {

int run(std::initializer_list<std::string> args) { return run_cli(std::vector<std::string>(args)); }

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// One small dataset shared by the tests that only read it.
const std::filesystem::path& shared_dataset() {
  static TempDir dir("cli_shared");
  static const bool made = [] {
    return run({"generate", "--out", (dir / "ds").string(), "--count", "10", "--seed", "1"}) == kExitOk;
  }();
  EXPECT_TRUE(made);
  static const auto path = dir / "ds";
  return path;
}

}  // namespace

TEST(Cli, GenerateTenSamples) {
  TempDir dir("cli_gen");
  ASSERT_EQ(run({"generate", "--out", (dir / "ds").string(), "--count", "10", "--seed", "1"}), kExitOk);
  EXPECT_EQ(list_sample_dirs(dir / "ds", "train").size() + list_sample_dirs(dir / "ds", "val").size(), 10u);
  EXPECT_TRUE(validate_dataset(dir / "ds").empty());
  const auto manifest = read_json(dir / "ds" / "run_manifest.json");
  EXPECT_EQ(manifest["command"], "generate");
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_EQ(manifest["results"]["dataset_checksum"], dataset_checksum(dir / "ds"));
}

TEST(Cli, GenerateIsDeterministic) {
  TempDir dir("cli_det");
  ASSERT_EQ(run({"generate", "--out", (dir / "a").string(), "--count", "6", "--seed", "9"}), kExitOk);
  ASSERT_EQ(run({"generate", "--out", (dir / "b").string(), "--count", "6", "--seed", "9"}), kExitOk);
  EXPECT_EQ(dataset_checksum(dir / "a"), dataset_checksum(dir / "b"));
}

TEST(Cli, ConfigFileAndFlagOverride) {
  TempDir dir("cli_cfg");
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "[dataset]\ncount = 5\nseed = 3\n";
  }
  ASSERT_EQ(run({"generate", "--config", (dir / "run.ini").string(), "--out", (dir / "a").string(), "--count", "4"}),
            kExitOk);
  EXPECT_EQ(list_sample_dirs(dir / "a", "train").size() + list_sample_dirs(dir / "a", "val").size(), 4u);
  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[dataset]\ncount = -5\n";
  }
  EXPECT_EQ(run({"generate", "--config", (dir / "bad.ini").string(), "--out", (dir / "b").string()}), kExitConfig);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli_codes");
  EXPECT_EQ(run({}), kExitConfig);
  EXPECT_EQ(run({"no-such-command"}), kExitConfig);
  EXPECT_EQ(run({"evaluate", "--dataset", (dir / "missing").string(), "--out", (dir / "r").string(), "--decomposer",
                 "oracle", "--graspnet", "oracle"}),
            kExitData);
  EXPECT_EQ(run({"evaluate", "--dataset", shared_dataset().string(), "--out", (dir / "r2").string(), "--decomposer",
                 "oracle", "--graspnet", "oracle", "--splits", "novel"}),
            kExitData);
  EXPECT_EQ(run({"evaluate", "--dataset", shared_dataset().string(), "--out", (dir / "r3").string(), "--decomposer",
                 "oracle", "--graspnet", "oracle", "--thresholds", "0.3,0.2"}),
            kExitConfig);
  const auto manifest = read_json(dir / "r3" / "run_manifest.json");
  EXPECT_EQ(manifest["exit_code"], kExitConfig);
  EXPECT_TRUE(manifest.contains("error"));
}

TEST(Cli, EvaluateWithOraclesGivesFullRows) {
  TempDir dir("cli_eval");
  const std::string before = dataset_checksum(shared_dataset());
  ASSERT_EQ(run({"evaluate", "--dataset", shared_dataset().string(), "--out", (dir / "r").string(), "--decomposer",
                 "oracle", "--graspnet", "oracle", "--splits", "train,val"}),
            kExitOk);
  const auto report = read_report(dir / "r" / "report.json");
  EXPECT_EQ(report.overall.attempts, 10);
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) EXPECT_DOUBLE_EQ(report.overall.rate(i), 100.0);
  for (const auto& [name, t] : report.per_object) EXPECT_DOUBLE_EQ(t.rate(report.primary_index()), 100.0) << name;
  EXPECT_EQ(report.metadata["dataset_checksum"], before);
  EXPECT_EQ(dataset_checksum(shared_dataset()), before);
  EXPECT_TRUE(std::filesystem::exists(dir / "r" / "table_sweep.csv"));
}

TEST(Cli, OutputInsideDatasetIsRefused) {
  const std::string before = dataset_checksum(shared_dataset());
  EXPECT_EQ(run({"evaluate", "--dataset", shared_dataset().string(), "--out", (shared_dataset() / "report").string(),
                 "--decomposer", "oracle", "--graspnet", "oracle"}),
            kExitConfig);
  EXPECT_FALSE(std::filesystem::exists(shared_dataset() / "report" / "report.json"));
  std::filesystem::remove_all(shared_dataset() / "report");
  EXPECT_EQ(dataset_checksum(shared_dataset()), before);
}

TEST(Cli, AugmentLeavesSourceUntouched) {
  TempDir dir("cli_aug");
  const std::string before = dataset_checksum(shared_dataset());
  ASSERT_EQ(run({"augment", "--dataset", shared_dataset().string(), "--out", (dir / "aug").string(), "--multiplier", "2",
                 "--seed", "4"}),
            kExitOk);
  EXPECT_EQ(dataset_checksum(shared_dataset()), before);
  EXPECT_EQ(list_sample_dirs(dir / "aug", "train").size(), 2 * list_sample_dirs(shared_dataset(), "train").size());
}

TEST(Cli, TrainAndInfer) {
  TempDir dir("cli_train");
  const auto ds = shared_dataset().string();
  ASSERT_EQ(run({"train-decomposer", "--dataset", ds, "--out", (dir / "dec").string(), "--epochs", "1"}), kExitOk);
  ASSERT_EQ(run({"train-graspnet", "--dataset", ds, "--out", (dir / "gn").string(), "--epochs", "1"}), kExitOk);
  EXPECT_EQ(read_training_log(dir / "gn" / "training_log.jsonl").size(), 1u);

  // An untrained-looking decomposer never reaches confidence 1.
  const Sample s = read_sample(list_sample_dirs(shared_dataset(), "val").front());
  cv::imwrite((dir / "object.png").string(), s.object_image);
  cv::imwrite((dir / "approach.png").string(), s.approach_image);
  EXPECT_EQ(run({"infer", "--decomposer", (dir / "dec").string(), "--graspnet", (dir / "gn").string(), "--object",
                 (dir / "object.png").string(), "--approach", (dir / "approach.png").string(), "--mdc", "1.0", "--out",
                 (dir / "infer0").string()}),
            kExitNoElements);
  const auto failed = read_json(dir / "infer0" / "run_manifest.json");
  EXPECT_NE(failed["error"].get<std::string>().find("NoElementsDetected"), std::string::npos);

  const int rc = run({"infer", "--decomposer", (dir / "dec").string(), "--graspnet", (dir / "gn").string(), "--object",
                      (dir / "object.png").string(), "--approach", (dir / "approach.png").string(), "--mdc", "0.01",
                      "--overlay", (dir / "overlay.png").string(), "--out", (dir / "infer1").string()});
  if (rc == kExitOk) {
    EXPECT_FALSE(cv::imread((dir / "overlay.png").string()).empty());
    EXPECT_TRUE(read_json(dir / "infer1" / "run_manifest.json")["results"].contains("grasp"));
  } else {
    EXPECT_EQ(rc, kExitNoElements);
  }
}

TEST(Cli, TrainingIsDeterministic) {
  TempDir dir("cli_train_det");
  const auto ds = shared_dataset().string();
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(run({"train-graspnet", "--dataset", ds, "--out", (dir / out).string(), "--epochs", "2", "--seed", "5"}),
              kExitOk);
  }
  for (const char* f : {"weights.pt", "manifest.json", "training_log.jsonl", "run_manifest.json"}) {
    std::ifstream a(dir / "a" / f, std::ios::binary), b(dir / "b" / f, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    if (std::string(f) == "run_manifest.json") {
      // Paths differ between the two runs; everything else must match.
      auto ja = nlohmann::json::parse(sa), jb = nlohmann::json::parse(sb);
      EXPECT_EQ(ja["results"], jb["results"]);
      EXPECT_EQ(ja["config"], jb["config"]);
    } else {
      EXPECT_EQ(sa, sb) << f;
    }
  }
}
