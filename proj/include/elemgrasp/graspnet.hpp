#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "elemgrasp/config.hpp"
#include "elemgrasp/decomposer.hpp"
#include "elemgrasp/geometry.hpp"

namespace elemgrasp {

inline constexpr int kPartSlots = 3;

struct GraspNetConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1e-4;
  std::vector<int> part_channels = {16, 64, 128, 256};
  int approach_depth = 256;
  int fused_depth = 512;
  int output_dim = 4;
  double gripper_max_width = 80.0;
  double grasp_height = 30.0;
  /// Adds normalized x/y coordinate planes to every branch input.
  bool coord_channels = true;
  /// Randomly reorders the filled part slots of each training sample every
  /// epoch, so the network does not rely on the slot order of ground truth.
  bool shuffle_slots = true;
  std::uint64_t seed = 1;
  bool deterministic = true;

  /// Reads the `[graspnet]` section.
  static GraspNetConfig from_config(const KeyValueConfig& cfg);
  /// Throws Error(kConfig) when the fused depth or output size is off.
  void validate() const;
};

/// Network output, each component in [0, 1].
struct GraspOutput {
  double cx_norm = 0.0;
  double cy_norm = 0.0;
  double theta_norm = 0.0;
  double width_norm = 0.0;
};

GraspOutput normalize_grasp(const GraspRectangle& g, int width, int height, double gripper_max_width);

/// cx = cx_norm (W - 1), cy = cy_norm (H - 1), theta = theta_norm 180,
/// width = width_norm gripper_max_width (floored at a small positive value so
/// the rectangle stays valid), height = `grasp_height`.
GraspRectangle denormalize_grasp(const GraspOutput& o, int width, int height, double gripper_max_width,
                                 double grasp_height);

/// Part k is `object_image` with pixels outside detection k zeroed; slots
/// past the detections are all-zero. Throws Error(kNoElementsDetected) for
/// an empty detection list.
std::array<cv::Mat, kPartSlots> masked_parts(const cv::Mat& object_image, const std::vector<Detection>& detections);

/// Maps a sample and its selected detections to a grasp.
using GraspSource = std::function<GraspRectangle(const Sample&, const std::vector<Detection>&)>;

}  // namespace elemgrasp
