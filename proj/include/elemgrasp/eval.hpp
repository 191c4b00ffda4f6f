#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elemgrasp/dataset.hpp"
#include "elemgrasp/decomposer.hpp"
#include "elemgrasp/graspnet.hpp"
#include "json.hpp"

namespace elemgrasp {

inline const std::vector<double> kDefaultThresholds = {0.20, 0.25, 0.30, 0.35};
inline constexpr double kPrimaryThreshold = 0.25;
inline constexpr int kReportSchemaVersion = 1;

enum class FailureKind { kSuccess, kNoElements, kAngleFail, kJaccardFail, kBoth };
std::string_view failure_kind_name(FailureKind k);
FailureKind failure_kind_from_name(std::string_view name);

struct SampleOutcome {
  std::string id;
  std::string object_name;
  SeenSplit split = SeenSplit::kTrainObject;
  int detections = 0;
  std::optional<GraspRectangle> predicted;
  double jaccard = 0.0;     // 0 when nothing was predicted
  double angle_diff = 0.0;  // 0 when nothing was predicted
  std::vector<bool> success;  // per threshold
  FailureKind failure = FailureKind::kSuccess;  // at the primary threshold

  friend bool operator==(const SampleOutcome&, const SampleOutcome&) = default;
};

struct Tally {
  int attempts = 0;
  std::vector<int> successes;  // per threshold
  double jaccard_sum = 0.0;

  /// Percent; 0 when there are no attempts.
  double rate(std::size_t threshold_index) const;
  /// Percent over every attempt, failures included.
  double mean_jaccard() const;

  friend bool operator==(const Tally&, const Tally&) = default;
};

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  std::vector<double> thresholds;
  double primary_threshold = kPrimaryThreshold;
  double angle_threshold_deg = 30.0;
  double mdc = 0.85;
  std::map<std::string, Tally> per_object;
  std::map<std::string, SeenSplit> object_split;
  Tally seen;
  Tally unseen;
  Tally overall;
  std::map<std::string, int> failures;  // by failure kind name, at the primary threshold
  std::vector<SampleOutcome> samples;
  std::optional<DscTable> dsc;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  std::size_t primary_index() const;
};

bool operator==(const EvalReport& a, const EvalReport& b);

struct PipelineOptions {
  double mdc = 0.85;
  std::vector<double> thresholds = kDefaultThresholds;
  double primary_threshold = kPrimaryThreshold;
  double angle_threshold_deg = 30.0;
};

/// Decompose, predict and score every sample. Samples with no detection
/// above the MDC fail at every threshold. Throws Error(kEmptySplit) for no
/// samples and Error(kConfig) for unsorted or out-of-range thresholds.
EvalReport evaluate_pipeline(const DetectionSource& detections, const GraspSource& grasps,
                             const std::vector<Sample>& samples, const PipelineOptions& options = {});

/// Invariant violations of a report (rates, conservation, monotone sweep).
std::vector<std::string> report_problems(const EvalReport& r);

nlohmann::ordered_json report_to_json(const EvalReport& r);
/// Throws Error(kSchemaViolation) for malformed or wrong-version documents.
EvalReport report_from_json(const nlohmann::ordered_json& j);

enum ReportFormat : unsigned { kReportJson = 1u, kReportTables = 2u, kReportPlots = 4u, kReportAll = 7u };

/// Writes report.json, table_*.csv and plot_*.png into `dir` as selected.
/// Returns the files written. Throws Error(kIo) when `dir` is unwritable.
std::vector<std::filesystem::path> write_report(const EvalReport& r, const std::filesystem::path& dir,
                                                unsigned formats = kReportAll);
EvalReport read_report(const std::filesystem::path& path);

/// Ground-truth detections (confidence 1) for every sample.
DetectionSource oracle_detection_source();
/// Echoes each sample's label when at least one detection is given.
GraspSource oracle_grasp_source();

}  // namespace elemgrasp
