#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>

#include "elemgrasp/errors.hpp"
#include "elemgrasp/eval.hpp"
#include "test_util.hpp"

using namespace elemgrasp;
using namespace elemgrasp::testkit;

namespace {

// 8 seen samples over four templates plus 4 unseen ones.
const std::vector<Sample>& mixed_samples() {
  static const std::vector<Sample> samples = [] {
    std::vector<Sample> out;
    GenerationConfig cfg;
    const auto& train = train_template_names();
    const auto& novel = novel_template_names();
    for (int i = 0; i < 8; ++i) {
      out.push_back(generate_sample(cfg, train[i % 4], 100 + i, "s" + std::to_string(i), SeenSplit::kTrainObject));
    }
    for (int i = 0; i < 4; ++i) {
      out.push_back(generate_sample(cfg, novel[i % novel.size()], 200 + i, "n" + std::to_string(i), SeenSplit::kNovelObject));
    }
    return out;
  }();
  return samples;
}

GraspSource constant_source(const GraspRectangle& g) {
  return [g](const Sample&, const std::vector<Detection>&) { return g; };
}

DetectionSource no_detections() {
  return [](const Sample&) { return std::vector<Detection>{}; };
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::size_t count_fields(const std::string& line) { return std::count(line.begin(), line.end(), ',') + 1; }

}  // namespace

TEST(Eval, OracleScoresFullMarks) {
  const auto r = evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), mixed_samples());
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.overall.rate(i), 100.0);
    EXPECT_DOUBLE_EQ(r.seen.rate(i), 100.0);
    EXPECT_DOUBLE_EQ(r.unseen.rate(i), 100.0);
  }
  EXPECT_NEAR(r.overall.mean_jaccard(), 100.0, 1e-9);
  EXPECT_EQ(r.failures.at("success"), 12);
  EXPECT_EQ(r.seen.attempts, 8);
  EXPECT_EQ(r.unseen.attempts, 4);
  EXPECT_TRUE(report_problems(r).empty());
}

TEST(Eval, OffObjectConstantScoresZero) {
  const auto r = evaluate_pipeline(oracle_detection_source(), constant_source(GraspRectangle(3, 3, 0, 4, 4)),
                                   mixed_samples());
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) EXPECT_EQ(r.overall.successes[i], 0);
  EXPECT_DOUBLE_EQ(r.overall.mean_jaccard(), 0.0);
  EXPECT_EQ(r.failures.at("success"), 0);
  EXPECT_EQ(r.failures.at("no-elements"), 0);
}

TEST(Eval, NoDetectionsFailAtEveryThreshold) {
  const auto r = evaluate_pipeline(no_detections(), oracle_grasp_source(), mixed_samples());
  EXPECT_EQ(r.failures.at("no-elements"), 12);
  for (const auto& s : r.samples) {
    EXPECT_FALSE(s.predicted.has_value());
    EXPECT_EQ(s.jaccard, 0.0);
    for (bool ok : s.success) EXPECT_FALSE(ok);
  }
  EXPECT_EQ(r.overall.attempts, 12);
}

TEST(Eval, DetectionsBelowMdcCountAsNoElements) {
  const DetectionSource weak = [](const Sample& s) {
    auto d = ground_truth_detections(s);
    for (auto& x : d) x.confidence = 0.5;
    return d;
  };
  const auto r = evaluate_pipeline(weak, oracle_grasp_source(), mixed_samples(), {.mdc = 0.85});
  EXPECT_EQ(r.failures.at("no-elements"), 12);
  const auto lenient = evaluate_pipeline(weak, oracle_grasp_source(), mixed_samples(), {.mdc = 0.4});
  EXPECT_EQ(lenient.failures.at("success"), 12);
}

TEST(Eval, GraspSourceSignallingNoElementsIsAFailure) {
  const GraspSource refuses = [](const Sample&, const std::vector<Detection>&) -> GraspRectangle {
    throw Error(ErrorCode::kNoElementsDetected, "nothing");
  };
  const auto r = evaluate_pipeline(oracle_detection_source(), refuses, mixed_samples());
  EXPECT_EQ(r.failures.at("no-elements"), 12);
}

TEST(Eval, FailureTaxonomy) {
  const std::vector<Sample> one = {mixed_samples()[0]};
  const GraspRectangle& g = one[0].grasp;
  auto kind = [&](const GraspRectangle& p) {
    return evaluate_pipeline(oracle_detection_source(), constant_source(p), one).samples[0].failure;
  };
  EXPECT_EQ(kind(g), FailureKind::kSuccess);
  // A square the grasp's height on a side keeps Jaccard above the threshold.
  EXPECT_EQ(kind(GraspRectangle(g.cx(), g.cy(), g.theta_deg() + 90, g.height_px(), g.height_px())),
            FailureKind::kAngleFail);
  EXPECT_EQ(kind(GraspRectangle(3, 3, g.theta_deg(), 4, 4)), FailureKind::kJaccardFail);
  EXPECT_EQ(kind(GraspRectangle(3, 3, g.theta_deg() + 90, 4, 4)), FailureKind::kBoth);
}

TEST(Eval, OverallIsAttemptsWeightedMean) {
  // Succeed on seen samples only.
  const GraspSource seen_only = [](const Sample& s, const std::vector<Detection>&) {
    return s.seen_split == SeenSplit::kTrainObject ? s.grasp : GraspRectangle(3, 3, 0, 4, 4);
  };
  const auto r = evaluate_pipeline(oracle_detection_source(), seen_only, mixed_samples());
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    const double weighted = (r.seen.rate(i) * r.seen.attempts + r.unseen.rate(i) * r.unseen.attempts) /
                            (r.seen.attempts + r.unseen.attempts);
    EXPECT_NEAR(r.overall.rate(i), weighted, 1e-9);
  }
  EXPECT_DOUBLE_EQ(r.seen.rate(r.primary_index()), 100.0);
  EXPECT_DOUBLE_EQ(r.unseen.rate(r.primary_index()), 0.0);
}

TEST(Eval, SweepIsNonIncreasing) {
  // Shifted predictions give intermediate Jaccard values.
  const GraspSource shifted = [](const Sample& s, const std::vector<Detection>&) {
    const GraspRectangle& g = s.grasp;
    return GraspRectangle(g.cx() + 0.4 * g.width_px(), g.cy(), g.theta_deg(), g.width_px(), g.height_px());
  };
  const auto r = evaluate_pipeline(oracle_detection_source(), shifted, mixed_samples(),
                                   {.thresholds = {0.05, 0.25, 0.45, 0.65, 0.85}});
  for (std::size_t i = 1; i < r.thresholds.size(); ++i) EXPECT_LE(r.overall.successes[i], r.overall.successes[i - 1]);
  EXPECT_TRUE(report_problems(r).empty());
}

TEST(Eval, InputErrors) {
  try {
    evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySplit);
  }
  for (const std::vector<double> bad : {std::vector<double>{0.3, 0.2, 0.25}, std::vector<double>{0.2, 0.3},
                                        std::vector<double>{}, std::vector<double>{0.25, 1.5}}) {
    try {
      evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), mixed_samples(), {.thresholds = bad});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfig);
    }
  }
}

TEST(Eval, ProblemsFlagTamperedReports) {
  auto r = evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), mixed_samples());
  auto rising = r;
  rising.overall.successes[0] = 5;
  EXPECT_FALSE(report_problems(rising).empty());
  auto lost = r;
  lost.seen.attempts -= 1;
  EXPECT_FALSE(report_problems(lost).empty());
}

TEST(Eval, JsonRoundTrip) {
  auto r = evaluate_pipeline(oracle_detection_source(), constant_source(GraspRectangle(100.3, 90.1, 17.25, 33.3, 30)),
                             mixed_samples());
  r.dsc = evaluate_decomposer(oracle_detection_source(), mixed_samples(), {0.8, 0.85, 0.9});
  r.metadata = {{"dataset_checksum", "abc"}, {"decomposer_fingerprint", "d"}, {"graspnet_fingerprint", "g"}};
  TempDir dir("report");
  write_report(r, dir.path(), kReportJson);
  const auto back = read_report(dir / "report.json");
  EXPECT_TRUE(back == r);
  EXPECT_EQ(back.schema_version, kReportSchemaVersion);
}

TEST(Eval, RejectsOtherSchemaVersions) {
  auto j = report_to_json(evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), mixed_samples()));
  j["schema_version"] = 99;
  try {
    report_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
  }
}

TEST(Eval, TablesAndPlots) {
  auto r = evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), mixed_samples());
  r.dsc = evaluate_decomposer(oracle_detection_source(), mixed_samples(), {0.8, 0.85, 0.9});
  TempDir dir("tables");
  const auto files = write_report(r, dir.path());
  EXPECT_GE(files.size(), 7u);

  const auto sweep = read_lines(dir / "table_sweep.csv");
  ASSERT_EQ(sweep.size(), 2u);
  EXPECT_EQ(count_fields(sweep[0]), r.thresholds.size());
  EXPECT_EQ(sweep[1], "100.00,100.00,100.00,100.00");

  const auto success = read_lines(dir / "table_success.csv");
  int attempts = 0;
  for (std::size_t i = 1; i < success.size(); ++i) {
    std::istringstream row(success[i]);
    std::string object, split, n;
    std::getline(row, object, ',');
    std::getline(row, split, ',');
    std::getline(row, n, ',');
    if (!split.empty()) attempts += std::stoi(n);
  }
  EXPECT_EQ(attempts, 12);

  const auto dsc = read_lines(dir / "table_dsc.csv");
  ASSERT_EQ(dsc.size(), 7u);
  EXPECT_EQ(count_fields(dsc[0]), 4u);

  for (const char* png : {"plot_sweep.png", "plot_objects.png"}) {
    const cv::Mat img = cv::imread((dir / png).string());
    EXPECT_FALSE(img.empty()) << png;
  }
}
