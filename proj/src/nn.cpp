#include "elemgrasp/nn.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "elemgrasp/dataset.hpp"
#include "elemgrasp/errors.hpp"
#include "elemgrasp/rng.hpp"

namespace elemgrasp {

using nlohmann::ordered_json;

torch::Tensor image_to_u8_tensor(const cv::Mat& image) {
  if (image.type() != CV_8UC3) throw Error(ErrorCode::kDimensionMismatch, "expected an 8-bit 3-channel image");
  cv::Mat packed = image.isContinuous() ? image : image.clone();
  return torch::from_blob(packed.data, {image.rows, image.cols, 3}, torch::kUInt8)
      .permute({2, 0, 1})
      .contiguous();
}

torch::Tensor mask_to_u8_tensor(const BinaryMask& mask) {
  auto t = torch::empty({mask.height(), mask.width()}, torch::kUInt8);
  std::copy(mask.bits().begin(), mask.bits().end(), t.data_ptr<std::uint8_t>());
  return t;
}

void configure_torch(std::uint64_t seed, bool deterministic) {
  torch::manual_seed(seed);
  if (deterministic) {
    at::set_num_threads(1);
    at::globalContext().setDeterministicAlgorithms(true, true);
  }
}

ordered_json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"loss", r.train_loss},
          {"val_loss", r.val_loss},
          {"val_metric", r.val_metric},
          {"seconds", r.seconds}};
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  // Wall-clock time is left out so deterministic runs give identical logs.
  for (const auto& r : log) {
    auto j = to_json(r);
    j.erase("seconds");
    out << j.dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::vector<EpochRecord> read_training_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "no training log at " + path.string());
  std::vector<EpochRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = ordered_json::parse(line);
    out.push_back({j.at("epoch").get<int>(), j.at("loss").get<double>(), j.at("val_loss").get<double>(),
                   j.at("val_metric").get<double>(), j.value("seconds", 0.0)});
  }
  return out;
}

std::string config_fingerprint(const ordered_json& config) { return sha256_hex(config.dump()); }

void write_manifest(const std::filesystem::path& dir, const ordered_json& manifest) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir.string());
}

ordered_json read_manifest(const std::filesystem::path& dir, const std::string& expected_kind) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "no model manifest at " + path.string());
  ordered_json j = ordered_json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kSchemaViolation, "malformed " + path.string());
  if (j.value("kind", "") != expected_kind) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + " is not a " + expected_kind + " artifact");
  }
  if (!std::filesystem::exists(dir / "weights.pt")) {
    throw Error(ErrorCode::kMissingFile, "no weights in " + dir.string());
  }
  return j;
}

std::vector<std::int64_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::int64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace elemgrasp
