#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "elemgrasp/geometry.hpp"
#include "json.hpp"

namespace elemgrasp {

/// CV_8UC3 image to a uint8 [3, H, W] tensor (channel order kept).
torch::Tensor image_to_u8_tensor(const cv::Mat& image);

/// Mask to a uint8 [H, W] tensor of 0/1.
torch::Tensor mask_to_u8_tensor(const BinaryMask& mask);

/// uint8 batch to float in [0, 1].
inline torch::Tensor to_unit_float(const torch::Tensor& u8) { return u8.to(torch::kFloat32).div_(255.0); }

/// Seeds torch and, in deterministic mode, pins the thread count and asks
/// for deterministic kernels.
void configure_torch(std::uint64_t seed, bool deterministic);

/// Per-epoch training record, written as one JSON object per line.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  double seconds = 0.0;
};

nlohmann::ordered_json to_json(const EpochRecord& r);
void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log);
std::vector<EpochRecord> read_training_log(const std::filesystem::path& path);

/// Hex SHA-256 of the compact dump of `config`.
std::string config_fingerprint(const nlohmann::ordered_json& config);

/// Artifact layout: `<dir>/weights.pt` and `<dir>/manifest.json`.
void write_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& manifest);
nlohmann::ordered_json read_manifest(const std::filesystem::path& dir, const std::string& expected_kind);

/// Index permutation of [0, n) drawn from `seed`.
std::vector<std::int64_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace elemgrasp
