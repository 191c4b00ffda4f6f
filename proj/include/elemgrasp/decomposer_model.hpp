#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "elemgrasp/decomposer.hpp"
#include "elemgrasp/nn.hpp"

namespace elemgrasp {

/// Compact encoder-decoder with one sigmoid channel per element class.
/// Input [B, 3, 224, 224] in [0, 1]; output logits [B, 5, 112, 112].
class DecomposerNetImpl : public torch::nn::Module {
 public:
  DecomposerNetImpl();
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential enc1_{nullptr}, enc2_{nullptr}, enc3_{nullptr}, mid_{nullptr};
  torch::nn::Sequential dec3_{nullptr}, dec2_{nullptr}, dec1_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(DecomposerNet);

/// 1 - (2 |P T| + 1) / (|P| + |T| + 1) per image and channel, averaged.
/// Inputs are [B, C, H, W].
torch::Tensor soft_dice_loss(const torch::Tensor& prob, const torch::Tensor& target);

/// Binary cross-entropy on logits plus soft Dice on their sigmoid.
torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& target);

inline constexpr int kDecomposerResolution = 112;
inline constexpr const char* kDecomposerBackbone = "fallback-encoder-decoder";

struct TrainedDecomposer {
  DecomposerNet net{nullptr};
  DecomposerConfig config;
  std::string fingerprint;

  /// Per-class probability maps [5, 224, 224].
  torch::Tensor probabilities(const cv::Mat& image) const;
  /// Unfiltered instances for one image.
  std::vector<Detection> raw_detections(const cv::Mat& image) const;
};

/// Connected components of each class map thresholded at 0.5; confidence
/// is the mean probability inside the component. Components smaller than
/// `min_area` pixels are dropped.
std::vector<Detection> instances_from_probabilities(const torch::Tensor& probs, int min_area);

struct DecomposerTraining {
  TrainedDecomposer model;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Throws Error(kEmptySplit) when either split is empty.
DecomposerTraining train_decomposer(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                    const DecomposerConfig& cfg, const EpochCallback& on_epoch = {});

/// Loads the train and val splits of a dataset directory and trains.
/// Throws Error(kMissingSplit) when a split directory is absent.
DecomposerTraining train_decomposer(const std::filesystem::path& dataset, const DecomposerConfig& cfg,
                                    const EpochCallback& on_epoch = {});

nlohmann::ordered_json decomposer_config_json(const DecomposerConfig& cfg);

void save_decomposer(const TrainedDecomposer& model, const std::filesystem::path& dir);
TrainedDecomposer load_decomposer(const std::filesystem::path& dir);

/// Detections with confidence >= mdc, at most three, ranked.
std::vector<Detection> decompose(const TrainedDecomposer& model, const cv::Mat& image, double mdc);

/// Raw detections on each sample's object image.
DetectionSource detection_source(const TrainedDecomposer& model);

}  // namespace elemgrasp
