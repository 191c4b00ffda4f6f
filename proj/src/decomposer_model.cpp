#include "elemgrasp/decomposer_model.hpp"

#include <chrono>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

namespace F = torch::nn::functional;
using nlohmann::ordered_json;

namespace {

torch::nn::Sequential conv_block(int in, int out) {
  auto groups = std::min(8, out / 4);
  return torch::nn::Sequential(
      torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)),
      torch::nn::GroupNorm(torch::nn::GroupNormOptions(groups, out)), torch::nn::ReLU(),
      torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1)),
      torch::nn::GroupNorm(torch::nn::GroupNormOptions(groups, out)), torch::nn::ReLU());
}

torch::Tensor upsample_to(const torch::Tensor& x, const torch::Tensor& like) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{like.size(2), like.size(3)})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

// Class masks at the internal resolution, as area fractions per cell.
torch::Tensor soft_targets(const Sample& s) {
  auto t = torch::zeros({kNumElementClasses, kImageSize, kImageSize});
  for (const auto& e : s.elements) {
    auto m = mask_to_u8_tensor(e.mask).to(torch::kFloat32);
    auto slot = t[static_cast<int>(e.element_class)];
    slot.copy_(torch::maximum(slot, m));
  }
  return F::avg_pool2d(t.unsqueeze(0), F::AvgPool2dFuncOptions(kImageSize / kDecomposerResolution)).squeeze(0);
}

struct Tensors {
  torch::Tensor images;   // uint8 [N, 3, 224, 224]
  torch::Tensor targets;  // float [N, 5, 112, 112]
};

Tensors stack_samples(const std::vector<Sample>& samples) {
  std::vector<torch::Tensor> images, targets;
  images.reserve(samples.size());
  targets.reserve(samples.size());
  for (const auto& s : samples) {
    images.push_back(image_to_u8_tensor(s.object_image));
    targets.push_back(soft_targets(s));
  }
  return {torch::stack(images), torch::stack(targets)};
}

// Mean Dice of thresholded predictions against thresholded targets, over
// class channels that contain ground truth.
double mean_channel_dice(const torch::Tensor& logits, const torch::Tensor& target) {
  const auto pred = (logits > 0).to(torch::kFloat32);
  const auto truth = (target > 0.5).to(torch::kFloat32);
  const auto inter = (pred * truth).sum({2, 3});
  const auto total = pred.sum({2, 3}) + truth.sum({2, 3});
  const auto present = truth.sum({2, 3}) > 0;
  const auto d = (2.0 * inter / total.clamp_min(1.0)).masked_select(present);
  return d.numel() == 0 ? 0.0 : d.mean().item<double>();
}

std::pair<double, double> evaluate_loss(DecomposerNet& net, const Tensors& data, int batch_size) {
  torch::NoGradGuard guard;
  net->eval();
  const auto n = data.images.size(0);
  double loss = 0.0, metric = 0.0;
  for (int64_t b = 0; b < n; b += batch_size) {
    const auto e = std::min<int64_t>(n, b + batch_size);
    const auto logits = net->forward(to_unit_float(data.images.slice(0, b, e)));
    const auto y = data.targets.slice(0, b, e);
    loss += segmentation_loss(logits, y).item<double>() * static_cast<double>(e - b);
    metric += mean_channel_dice(logits, y) * static_cast<double>(e - b);
  }
  return {loss / static_cast<double>(n), metric / static_cast<double>(n)};
}

}  // namespace

torch::Tensor soft_dice_loss(const torch::Tensor& prob, const torch::Tensor& target) {
  const auto inter = (prob * target).sum({2, 3});
  const auto total = prob.sum({2, 3}) + target.sum({2, 3});
  return (1.0 - (2.0 * inter + 1.0) / (total + 1.0)).mean();
}

torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& target) {
  return F::binary_cross_entropy_with_logits(logits, target) + soft_dice_loss(torch::sigmoid(logits), target);
}

DecomposerNetImpl::DecomposerNetImpl() {
  enc1_ = register_module("enc1", conv_block(3, 16));
  enc2_ = register_module("enc2", conv_block(16, 32));
  enc3_ = register_module("enc3", conv_block(32, 64));
  mid_ = register_module("mid", conv_block(64, 64));
  dec3_ = register_module("dec3", conv_block(128, 64));
  dec2_ = register_module("dec2", conv_block(96, 32));
  dec1_ = register_module("dec1", conv_block(48, 16));
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(16, kNumElementClasses, 1)));
}

torch::Tensor DecomposerNetImpl::forward(const torch::Tensor& x) {
  const auto s = F::avg_pool2d(x, F::AvgPool2dFuncOptions(kImageSize / kDecomposerResolution));
  const auto e1 = enc1_->forward(s);
  const auto e2 = enc2_->forward(F::max_pool2d(e1, F::MaxPool2dFuncOptions(2)));
  const auto e3 = enc3_->forward(F::max_pool2d(e2, F::MaxPool2dFuncOptions(2)));
  const auto m = mid_->forward(F::max_pool2d(e3, F::MaxPool2dFuncOptions(2)));
  auto d = dec3_->forward(torch::cat({upsample_to(m, e3), e3}, 1));
  d = dec2_->forward(torch::cat({upsample_to(d, e2), e2}, 1));
  d = dec1_->forward(torch::cat({upsample_to(d, e1), e1}, 1));
  return head_->forward(d);
}

torch::Tensor TrainedDecomposer::probabilities(const cv::Mat& image) const {
  torch::NoGradGuard guard;
  DecomposerNet module = net;
  module->eval();
  const auto x = to_unit_float(image_to_u8_tensor(image)).unsqueeze(0);
  const auto logits = module->forward(x);
  const auto full = F::interpolate(logits, F::InterpolateFuncOptions()
                                               .size(std::vector<int64_t>{image.rows, image.cols})
                                               .mode(torch::kBilinear)
                                               .align_corners(false));
  return torch::sigmoid(full).squeeze(0).contiguous();
}

std::vector<Detection> TrainedDecomposer::raw_detections(const cv::Mat& image) const {
  return instances_from_probabilities(probabilities(image), config.min_instance_area);
}

std::vector<Detection> instances_from_probabilities(const torch::Tensor& probs, int min_area) {
  if (probs.dim() != 3 || probs.size(0) != kNumElementClasses) {
    throw Error(ErrorCode::kDimensionMismatch, "expected [5, H, W] class probabilities");
  }
  const int h = static_cast<int>(probs.size(1)), w = static_cast<int>(probs.size(2));
  const auto p = probs.to(torch::kFloat32).contiguous();
  std::vector<Detection> out;
  for (int c = 0; c < kNumElementClasses; ++c) {
    cv::Mat prob(h, w, CV_32FC1, p[c].data_ptr<float>());
    cv::Mat binary = prob > 0.5f;
    cv::Mat labels, stats, centroids;
    const int n = cv::connectedComponentsWithStats(binary, labels, stats, centroids, 8, CV_32S);
    std::vector<double> sum(n, 0.0);
    for (int y = 0; y < h; ++y) {
      const auto* lab = labels.ptr<int>(y);
      const auto* pr = prob.ptr<float>(y);
      for (int x = 0; x < w; ++x) sum[lab[x]] += pr[x];
    }
    for (int k = 1; k < n; ++k) {
      const int area = stats.at<int>(k, cv::CC_STAT_AREA);
      if (area < min_area) continue;
      std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
      for (int y = 0; y < h; ++y) {
        const auto* lab = labels.ptr<int>(y);
        for (int x = 0; x < w; ++x) bits[static_cast<std::size_t>(y) * w + x] = lab[x] == k;
      }
      out.push_back({kAllElementClasses[c], BinaryMask(w, h, std::move(bits)), sum[k] / area});
    }
  }
  std::stable_sort(out.begin(), out.end(), detection_before);
  return out;
}

ordered_json decomposer_config_json(const DecomposerConfig& cfg) {
  ordered_json classes = ordered_json::array();
  for (auto c : kAllElementClasses) classes.push_back(std::string(class_name(c)));
  return {{"architecture", "unet-gn"},
          {"backbone", kDecomposerBackbone},
          {"internal_resolution", kDecomposerResolution},
          {"classes", classes},
          {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"momentum", cfg.momentum},
          {"optimizer", "sgd"},
          {"batch_size", cfg.batch_size},
          {"mdc_default", cfg.mdc_default},
          {"max_instances", cfg.max_instances},
          {"min_instance_area", cfg.min_instance_area},
          {"seed", cfg.seed},
          {"deterministic", cfg.deterministic}};
}

DecomposerTraining train_decomposer(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                    const DecomposerConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorCode::kEmptySplit, "decomposer training split is empty");
  if (val.empty()) throw Error(ErrorCode::kEmptySplit, "decomposer validation split is empty");
  configure_torch(cfg.seed, cfg.deterministic);

  DecomposerTraining result;
  result.model.config = cfg;
  result.model.fingerprint = config_fingerprint(decomposer_config_json(cfg));
  DecomposerNet net;
  result.model.net = net;

  const Tensors tr = stack_samples(train);
  const Tensors va = stack_samples(val);
  torch::optim::SGD opt(net->parameters(), torch::optim::SGDOptions(cfg.learning_rate).momentum(cfg.momentum));
  const auto n = static_cast<std::size_t>(tr.images.size(0));
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    net->train();
    const auto order = shuffled_indices(n, derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    double total = 0.0;
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(n, b + static_cast<std::size_t>(cfg.batch_size));
      const auto idx = torch::tensor(std::vector<int64_t>(order.begin() + b, order.begin() + e));
      const auto x = to_unit_float(tr.images.index_select(0, idx));
      const auto y = tr.targets.index_select(0, idx);
      opt.zero_grad();
      const auto loss = segmentation_loss(net->forward(x), y);
      loss.backward();
      opt.step();
      total += loss.item<double>() * static_cast<double>(e - b);
    }
    const auto [val_loss, val_dice] = evaluate_loss(net, va, cfg.batch_size);
    EpochRecord rec{epoch, total / static_cast<double>(n), val_loss, val_dice,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    if (!std::isfinite(rec.train_loss)) throw Error(ErrorCode::kConfig, "decomposer training diverged");
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  net->eval();
  return result;
}

DecomposerTraining train_decomposer(const std::filesystem::path& dataset, const DecomposerConfig& cfg,
                                    const EpochCallback& on_epoch) {
  for (const auto split : {kTrainSplit, kValSplit}) {
    if (!std::filesystem::is_directory(dataset / split)) {
      throw Error(ErrorCode::kMissingSplit, "dataset has no '" + std::string(split) + "' split: " + dataset.string());
    }
  }
  return train_decomposer(load_split(dataset, kTrainSplit), load_split(dataset, kValSplit), cfg, on_epoch);
}

void save_decomposer(const TrainedDecomposer& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  torch::save(model.net, (dir / "weights.pt").string());
  ordered_json manifest = {{"kind", "decomposer"},
                           {"format_version", 1},
                           {"fingerprint", model.fingerprint},
                           {"config", decomposer_config_json(model.config)}};
  write_manifest(dir, manifest);
}

TrainedDecomposer load_decomposer(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir, "decomposer");
  const auto& c = manifest.at("config");
  TrainedDecomposer model;
  model.config.epochs = c.at("epochs").get<int>();
  model.config.learning_rate = c.at("learning_rate").get<double>();
  model.config.momentum = c.at("momentum").get<double>();
  model.config.batch_size = c.at("batch_size").get<int>();
  model.config.mdc_default = c.at("mdc_default").get<double>();
  model.config.max_instances = c.at("max_instances").get<std::size_t>();
  model.config.min_instance_area = c.at("min_instance_area").get<int>();
  model.config.seed = c.at("seed").get<std::uint64_t>();
  model.config.deterministic = c.at("deterministic").get<bool>();
  model.config.validate();
  std::vector<std::string> classes = c.at("classes").get<std::vector<std::string>>();
  if (classes.size() != static_cast<std::size_t>(kNumElementClasses)) {
    throw Error(ErrorCode::kSchemaViolation, "decomposer class list has the wrong length");
  }
  for (int k = 0; k < kNumElementClasses; ++k) {
    if (class_from_name(classes[k]) != kAllElementClasses[k]) {
      throw Error(ErrorCode::kSchemaViolation, "decomposer class list is out of order");
    }
  }
  model.fingerprint = manifest.at("fingerprint").get<std::string>();
  model.net = DecomposerNet();
  torch::load(model.net, (dir / "weights.pt").string());
  model.net->eval();
  return model;
}

std::vector<Detection> decompose(const TrainedDecomposer& model, const cv::Mat& image, double mdc) {
  return select_detections(model.raw_detections(image), mdc, model.config.max_instances);
}

DetectionSource detection_source(const TrainedDecomposer& model) {
  return [&model](const Sample& s) { return model.raw_detections(s.object_image); };
}

}  // namespace elemgrasp
