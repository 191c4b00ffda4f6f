#include "elemgrasp/graspnet.hpp"

#include <algorithm>
#include <cmath>

#include "elemgrasp/errors.hpp"
#include "elemgrasp/image.hpp"

namespace elemgrasp {

namespace {

constexpr double kMinWidth = 1e-3;

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

}  // namespace

GraspNetConfig GraspNetConfig::from_config(const KeyValueConfig& cfg) {
  GraspNetConfig out;
  out.epochs = static_cast<int>(cfg.get_int("graspnet.epochs", out.epochs));
  out.batch_size = static_cast<int>(cfg.get_int("graspnet.batch_size", out.batch_size));
  out.learning_rate = cfg.get_double("graspnet.learning_rate", out.learning_rate);
  if (cfg.has("graspnet.part_channels")) {
    out.part_channels.clear();
    for (double c : cfg.get_double_list("graspnet.part_channels", {})) out.part_channels.push_back(static_cast<int>(c));
  }
  out.approach_depth = static_cast<int>(cfg.get_int("graspnet.approach_depth", out.approach_depth));
  out.fused_depth = static_cast<int>(cfg.get_int("graspnet.fused_depth", out.fused_depth));
  out.output_dim = static_cast<int>(cfg.get_int("graspnet.output_dim", out.output_dim));
  out.gripper_max_width = cfg.get_double("graspnet.gripper_max_width", out.gripper_max_width);
  out.grasp_height = cfg.get_double("graspnet.grasp_height", out.grasp_height);
  out.coord_channels = cfg.get_bool("graspnet.coord_channels", out.coord_channels);
  out.shuffle_slots = cfg.get_bool("graspnet.shuffle_slots", out.shuffle_slots);
  out.seed = static_cast<std::uint64_t>(cfg.get_int("graspnet.seed", static_cast<long long>(out.seed)));
  out.deterministic = cfg.get_bool("graspnet.deterministic", out.deterministic);
  out.validate();
  return out;
}

void GraspNetConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw Error(ErrorCode::kConfig, "epochs and batch_size must be positive");
  if (!(learning_rate > 0)) throw Error(ErrorCode::kConfig, "learning_rate must be positive");
  if (output_dim != 4) throw Error(ErrorCode::kConfig, "grasp network output must have exactly 4 values");
  if (part_channels.size() != 4 || std::any_of(part_channels.begin(), part_channels.end(), [](int c) { return c < 8 || c % 8; })) {
    throw Error(ErrorCode::kConfig, "part_channels needs four multiples of 8");
  }
  if (approach_depth < 8 || approach_depth % 8) throw Error(ErrorCode::kConfig, "approach_depth must be a multiple of 8");
  if (fused_depth != part_channels.back() + approach_depth) {
    throw Error(ErrorCode::kConfig, "fused_depth must equal part depth plus approach depth");
  }
  if (!(gripper_max_width > 0) || !(grasp_height > 0)) {
    throw Error(ErrorCode::kConfig, "gripper_max_width and grasp_height must be positive");
  }
}

GraspOutput normalize_grasp(const GraspRectangle& g, int width, int height, double gripper_max_width) {
  return {clamp01(g.cx() / (width - 1)), clamp01(g.cy() / (height - 1)), clamp01(g.theta_deg() / 180.0),
          clamp01(g.width_px() / gripper_max_width)};
}

GraspRectangle denormalize_grasp(const GraspOutput& o, int width, int height, double gripper_max_width,
                                 double grasp_height) {
  return GraspRectangle(clamp01(o.cx_norm) * (width - 1), clamp01(o.cy_norm) * (height - 1),
                        clamp01(o.theta_norm) * 180.0,
                        std::max(kMinWidth, clamp01(o.width_norm) * gripper_max_width), grasp_height);
}

std::array<cv::Mat, kPartSlots> masked_parts(const cv::Mat& object_image, const std::vector<Detection>& detections) {
  if (detections.empty()) throw Error(ErrorCode::kNoElementsDetected, "no elements detected");
  std::array<cv::Mat, kPartSlots> parts;
  for (int k = 0; k < kPartSlots; ++k) {
    parts[k] = cv::Mat::zeros(object_image.size(), object_image.type());
    if (k < static_cast<int>(detections.size())) {
      const BinaryMask& m = detections[k].mask;
      if (m.width() != object_image.cols || m.height() != object_image.rows) {
        throw Error(ErrorCode::kDimensionMismatch, "detection mask size differs from the image");
      }
      object_image.copyTo(parts[k], mask_to_mat(m));
    }
  }
  return parts;
}

}  // namespace elemgrasp
