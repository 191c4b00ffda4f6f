#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "elemgrasp/config.hpp"
#include "elemgrasp/dataset.hpp"
#include "elemgrasp/scene.hpp"

namespace elemgrasp {

/// One decomposed element as produced by a decomposition model.
struct Detection {
  ElementClass element_class = ElementClass::kCuboid;
  BinaryMask mask;
  double confidence = 0.0;
};

inline constexpr std::size_t kMaxInstances = 3;

/// Total order used everywhere detections are ranked: confidence
/// descending, then larger mask, then class order.
bool detection_before(const Detection& a, const Detection& b);

/// Keeps detections with confidence >= mdc, ranked, truncated to
/// `max_instances`. Throws Error(kConfig) when mdc is outside (0, 1].
std::vector<Detection> select_detections(std::vector<Detection> raw, double mdc,
                                         std::size_t max_instances = kMaxInstances);

/// Ground-truth elements as confidence-1 detections, in ranking order.
std::vector<Detection> ground_truth_detections(const Sample& s);

/// Anything that maps a sample to raw (unfiltered) detections: a trained
/// model looking at the object image, or a test oracle.
using DetectionSource = std::function<std::vector<Detection>(const Sample&)>;

struct DecomposerConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 4;
  double mdc_default = 0.85;
  std::size_t max_instances = kMaxInstances;
  int min_instance_area = 30;
  std::uint64_t seed = 1;
  bool deterministic = true;

  /// Reads the `[decomposer]` section.
  static DecomposerConfig from_config(const KeyValueConfig& cfg);
  void validate() const;
};

/// Table-I style Dice table: five class rows plus a Mean row, one column
/// per MDC. Values are percentages; classes without ground truth are NaN.
struct DscTable {
  std::vector<double> mdcs;
  std::array<std::vector<double>, kNumElementClasses> per_class;
  std::vector<double> mean;
  std::array<int, kNumElementClasses> ground_truth_counts{};
};

/// Per-sample Dice scores for one MDC: predictions are matched to ground
/// truth greedily by descending Dice within the same class; unmatched
/// ground truth scores 0. Returned in ground-truth order.
std::vector<double> matched_dice(const std::vector<ElementInstance>& truth,
                                 const std::vector<Detection>& predicted);

DscTable evaluate_decomposer(const DetectionSource& source, const std::vector<Sample>& samples,
                             const std::vector<double>& mdc_list);

}  // namespace elemgrasp
