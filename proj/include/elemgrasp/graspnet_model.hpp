#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "elemgrasp/dataset.hpp"
#include "elemgrasp/graspnet.hpp"
#include "elemgrasp/nn.hpp"

namespace elemgrasp {

inline constexpr int kGraspNetResolution = 56;
inline constexpr const char* kApproachBranch = "fallback-5block-encoder";

/// Three weight-shared part branches and an approach branch, fused to a
/// 4-vector in [0, 1]. Inputs are [B, 3, 3, 224, 224] parts and
/// [B, 3, 224, 224] approach images in [0, 1].
class GraspNetImpl : public torch::nn::Module {
 public:
  explicit GraspNetImpl(const GraspNetConfig& cfg = {});
  torch::Tensor forward(const torch::Tensor& parts, const torch::Tensor& approach);
  /// Same network on inputs already average-pooled to 56 x 56.
  torch::Tensor forward_pooled(const torch::Tensor& parts, const torch::Tensor& approach);
  /// Part-branch features [B, 256, 3, 3] for pooled parts.
  torch::Tensor part_features(const torch::Tensor& parts);

 private:
  torch::Tensor with_coords(const torch::Tensor& x) const;

  bool coords_;
  torch::nn::Sequential part_stem_{nullptr}, part_trunk_{nullptr}, approach_{nullptr}, fusion_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(GraspNet);

/// Appends x and y planes running from -1 to 1 to a [B, C, H, W] tensor.
torch::Tensor append_coord_channels(const torch::Tensor& x);

/// Average-pools a [.., 224, 224] float tensor to 56 x 56.
torch::Tensor pool_to_grasp_resolution(const torch::Tensor& x);

struct TrainedGraspNet {
  GraspNet net{nullptr};
  GraspNetConfig config;
  std::string fingerprint;
  std::string approach_branch = kApproachBranch;

  GraspOutput forward(const cv::Mat& object_image, const cv::Mat& approach_image,
                      const std::vector<Detection>& detections) const;
};

struct GraspNetTraining {
  TrainedGraspNet model;
  std::vector<EpochRecord> log;
};

nlohmann::ordered_json graspnet_config_json(const GraspNetConfig& cfg);

/// Trains on ground-truth element masks (parts ordered as
/// ground_truth_detections). The log's val_metric is the grasp success
/// rate on `val` at the default criteria. Throws Error(kEmptySplit).
GraspNetTraining train_grasp_net(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                 const GraspNetConfig& cfg,
                                 const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Loads the train and val splits of a dataset directory and trains.
GraspNetTraining train_grasp_net(const std::filesystem::path& dataset, const GraspNetConfig& cfg,
                                 const std::function<void(const EpochRecord&)>& on_epoch = {});

void save_grasp_net(const TrainedGraspNet& model, const std::filesystem::path& dir);
TrainedGraspNet load_grasp_net(const std::filesystem::path& dir);

/// Throws Error(kNoElementsDetected) for an empty detection list.
GraspRectangle predict_grasp(const TrainedGraspNet& model, const cv::Mat& object_image,
                             const cv::Mat& approach_image, const std::vector<Detection>& detections);

GraspSource grasp_source(const TrainedGraspNet& model);

}  // namespace elemgrasp
