#include "elemgrasp/graspnet_model.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

namespace F = torch::nn::functional;
using nlohmann::ordered_json;

namespace {

constexpr int kGroups = 8;

void add_cbr(torch::nn::Sequential& seq, int in, int out) {
  seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)));
  seq->push_back(torch::nn::GroupNorm(torch::nn::GroupNormOptions(kGroups, out)));
  seq->push_back(torch::nn::ReLU());
}

void add_pool(torch::nn::Sequential& seq) { seq->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2))); }

struct Batch {
  torch::Tensor parts;     // float [N, 3, 3, 56, 56]
  torch::Tensor approach;  // float [N, 3, 56, 56]
  torch::Tensor targets;   // float [N, 4]
  std::vector<GraspRectangle> grasps;
  std::vector<cv::Size> sizes;
  std::vector<int> filled;  // non-blank part slots per sample
};

torch::Tensor pooled_image(const cv::Mat& image) {
  return pool_to_grasp_resolution(to_unit_float(image_to_u8_tensor(image)).unsqueeze(0)).squeeze(0);
}

torch::Tensor target_tensor(const GraspOutput& o) {
  return torch::tensor({o.cx_norm, o.cy_norm, o.theta_norm, o.width_norm}, torch::kFloat32);
}

GraspOutput output_of(const torch::Tensor& row) {
  const auto r = row.to(torch::kFloat64).contiguous();
  const double* p = r.data_ptr<double>();
  return {p[0], p[1], p[2], p[3]};
}

// Only the pooled tensors and labels are kept, so `get` may load samples
// lazily from disk.
Batch stack_samples(std::size_t n, const std::function<Sample(std::size_t)>& get, const GraspNetConfig& cfg) {
  const int64_t r = kGraspNetResolution;
  const auto rows = static_cast<int64_t>(n);
  Batch out{torch::empty({rows, kPartSlots, 3, r, r}), torch::empty({rows, 3, r, r}), torch::empty({rows, 4}), {}, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Sample s = get(i);
    const auto row = static_cast<int64_t>(i);
    const auto dets = ground_truth_detections(s);
    const auto slots = masked_parts(s.object_image, dets);
    for (int k = 0; k < kPartSlots; ++k) out.parts[row][k].copy_(pooled_image(slots[static_cast<std::size_t>(k)]));
    out.approach[row].copy_(pooled_image(s.approach_image));
    out.targets[row].copy_(target_tensor(
        normalize_grasp(s.grasp, s.object_image.cols, s.object_image.rows, cfg.gripper_max_width)));
    out.grasps.push_back(s.grasp);
    out.sizes.push_back(s.object_image.size());
    out.filled.push_back(static_cast<int>(std::min<std::size_t>(dets.size(), kPartSlots)));
  }
  return out;
}

Batch stack_samples(const std::vector<Sample>& samples, const GraspNetConfig& cfg) {
  return stack_samples(samples.size(), [&](std::size_t i) { return samples[i]; }, cfg);
}

Batch stack_split(const std::filesystem::path& root, std::string_view split, const GraspNetConfig& cfg) {
  const auto dirs = list_sample_dirs(root, split);
  return stack_samples(dirs.size(), [&](std::size_t i) { return read_sample(dirs[i]); }, cfg);
}

std::pair<double, double> evaluate(GraspNet& net, const Batch& data, const GraspNetConfig& cfg) {
  torch::NoGradGuard guard;
  net->eval();
  const auto n = data.targets.size(0);
  double loss = 0.0;
  int hits = 0;
  for (int64_t b = 0; b < n; b += cfg.batch_size) {
    const auto e = std::min<int64_t>(n, b + cfg.batch_size);
    const auto out = net->forward_pooled(data.parts.slice(0, b, e), data.approach.slice(0, b, e));
    loss += (out - data.targets.slice(0, b, e)).abs().mean().item<double>() * static_cast<double>(e - b);
    for (int64_t i = b; i < e; ++i) {
      const auto& size = data.sizes[static_cast<std::size_t>(i)];
      const auto g = denormalize_grasp(output_of(out[i - b]), size.width, size.height, cfg.gripper_max_width,
                                       cfg.grasp_height);
      hits += grasp_success(g, data.grasps[static_cast<std::size_t>(i)]);
    }
  }
  return {loss / static_cast<double>(n), static_cast<double>(hits) / static_cast<double>(n)};
}

// Parts of the selected samples with their filled slots randomly permuted;
// blank slots stay last.
torch::Tensor shuffled_parts(const Batch& data, const std::vector<int64_t>& rows, Rng& rng) {
  std::vector<int64_t> order;
  order.reserve(rows.size() * kPartSlots);
  for (const auto r : rows) {
    std::array<int64_t, kPartSlots> slots = {0, 1, 2};
    std::shuffle(slots.begin(), slots.begin() + data.filled[static_cast<std::size_t>(r)], rng);
    for (const auto k : slots) order.push_back(r * kPartSlots + k);
  }
  const auto flat = data.parts.flatten(0, 1).index_select(0, torch::tensor(order));
  return flat.view({static_cast<int64_t>(rows.size()), kPartSlots, data.parts.size(2), data.parts.size(3),
                    data.parts.size(4)});
}

}  // namespace

torch::Tensor pool_to_grasp_resolution(const torch::Tensor& x) {
  const auto lead = x.sizes().slice(0, x.dim() - 2).vec();
  auto flat = x.reshape({-1, 1, x.size(-2), x.size(-1)});
  const auto pooled = F::avg_pool2d(flat, F::AvgPool2dFuncOptions(kImageSize / kGraspNetResolution));
  auto shape = lead;
  shape.push_back(pooled.size(-2));
  shape.push_back(pooled.size(-1));
  return pooled.reshape(shape);
}

GraspNetImpl::GraspNetImpl(const GraspNetConfig& cfg) : coords_(cfg.coord_channels) {
  cfg.validate();
  const int in = coords_ ? 5 : 3;
  const auto& pc = cfg.part_channels;

  part_stem_ = torch::nn::Sequential(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, pc[0], 3).padding(1)),
                                     torch::nn::ReLU());
  add_pool(part_stem_);
  part_stem_ = register_module("part_stem", part_stem_);

  part_trunk_ = torch::nn::Sequential();
  int c = pc[0] * kPartSlots;
  for (int stage = 1; stage < 4; ++stage) {
    add_cbr(part_trunk_, c, pc[stage]);
    add_cbr(part_trunk_, pc[stage], pc[stage]);
    add_pool(part_trunk_);
    c = pc[stage];
  }
  part_trunk_ = register_module("part_trunk", part_trunk_);

  approach_ = torch::nn::Sequential();
  const int widths[] = {16, 32, 64, 128, 128};
  c = in;
  for (int block = 0; block < 5; ++block) {
    add_cbr(approach_, c, widths[block]);
    if (block < 4) add_pool(approach_);
    c = widths[block];
  }
  add_cbr(approach_, c, cfg.approach_depth);
  approach_ = register_module("approach", approach_);

  fusion_ = torch::nn::Sequential();
  add_cbr(fusion_, cfg.fused_depth, 256);
  add_cbr(fusion_, 256, 128);
  add_cbr(fusion_, 128, 64);
  fusion_ = register_module("fusion", fusion_);

  const int side = kGraspNetResolution / 16;
  head_ = register_module("head", torch::nn::Linear(64 * side * side, cfg.output_dim));
}

torch::Tensor append_coord_channels(const torch::Tensor& x) {
  const auto h = x.size(-2), w = x.size(-1);
  const auto opts = x.options();
  const auto ys = torch::linspace(-1.0, 1.0, h, opts).view({1, 1, h, 1}).expand({x.size(0), 1, h, w});
  const auto xs = torch::linspace(-1.0, 1.0, w, opts).view({1, 1, 1, w}).expand({x.size(0), 1, h, w});
  return torch::cat({x, xs, ys}, 1);
}

torch::Tensor GraspNetImpl::with_coords(const torch::Tensor& x) const { return coords_ ? append_coord_channels(x) : x; }

torch::Tensor GraspNetImpl::part_features(const torch::Tensor& parts) {
  std::vector<torch::Tensor> feats;
  for (int k = 0; k < kPartSlots; ++k) feats.push_back(part_stem_->forward(with_coords(parts.select(1, k))));
  return part_trunk_->forward(torch::cat(feats, 1));
}

torch::Tensor GraspNetImpl::forward_pooled(const torch::Tensor& parts, const torch::Tensor& approach) {
  // Inputs are shifted to [-0.5, 0.5]; blank slots stay identical to each other.
  const auto p = part_features(parts - 0.5);
  const auto a = approach_->forward(with_coords(approach - 0.5));
  const auto fused = fusion_->forward(torch::cat({p, a}, 1));
  return torch::sigmoid(head_->forward(fused.flatten(1)));
}

torch::Tensor GraspNetImpl::forward(const torch::Tensor& parts, const torch::Tensor& approach) {
  return forward_pooled(pool_to_grasp_resolution(parts), pool_to_grasp_resolution(approach));
}

GraspOutput TrainedGraspNet::forward(const cv::Mat& object_image, const cv::Mat& approach_image,
                                     const std::vector<Detection>& detections) const {
  const auto slots = masked_parts(object_image, detections);
  std::vector<torch::Tensor> p;
  for (const auto& m : slots) p.push_back(pooled_image(m));
  torch::NoGradGuard guard;
  GraspNet module = net;
  module->eval();
  const auto out = module->forward_pooled(torch::stack(p).unsqueeze(0), pooled_image(approach_image).unsqueeze(0));
  return output_of(out[0]);
}

ordered_json graspnet_config_json(const GraspNetConfig& cfg) {
  return {{"architecture", "parts-approach-fusion-gn"},
          {"approach_branch", kApproachBranch},
          {"internal_resolution", kGraspNetResolution},
          {"input_shift", -0.5},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"optimizer", "adam"},
          {"loss", "mae"},
          {"part_channels", cfg.part_channels},
          {"approach_depth", cfg.approach_depth},
          {"fused_depth", cfg.fused_depth},
          {"output_dim", cfg.output_dim},
          {"gripper_max_width", cfg.gripper_max_width},
          {"grasp_height", cfg.grasp_height},
          {"coord_channels", cfg.coord_channels},
          {"shuffle_slots", cfg.shuffle_slots},
          {"seed", cfg.seed},
          {"deterministic", cfg.deterministic}};
}

namespace {

GraspNetTraining train_on(const Batch& tr, const Batch& va, const GraspNetConfig& cfg,
                          const std::function<void(const EpochRecord&)>& on_epoch) {
  configure_torch(cfg.seed, cfg.deterministic);
  GraspNetTraining result;
  result.model.config = cfg;
  result.model.fingerprint = config_fingerprint(graspnet_config_json(cfg));
  GraspNet net(cfg);
  result.model.net = net;

  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(cfg.learning_rate));
  const auto n = static_cast<std::size_t>(tr.targets.size(0));
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    net->train();
    const auto order = shuffled_indices(n, derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    Rng slot_rng(derive_seed(cfg.seed ^ 0x5107, static_cast<std::uint64_t>(epoch)));
    double total = 0.0;
    for (std::size_t b = 0; b < n; b += bs) {
      const std::size_t e = std::min(n, b + bs);
      const std::vector<int64_t> rows(order.begin() + b, order.begin() + e);
      const auto idx = torch::tensor(rows);
      const auto parts = cfg.shuffle_slots ? shuffled_parts(tr, rows, slot_rng) : tr.parts.index_select(0, idx);
      opt.zero_grad();
      const auto out = net->forward_pooled(parts, tr.approach.index_select(0, idx));
      const auto loss = (out - tr.targets.index_select(0, idx)).abs().mean();
      loss.backward();
      opt.step();
      total += loss.item<double>() * static_cast<double>(e - b);
    }
    const auto [val_loss, val_success] = evaluate(net, va, cfg);
    EpochRecord rec{epoch, total / static_cast<double>(n), val_loss, val_success,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    if (!std::isfinite(rec.train_loss)) throw Error(ErrorCode::kConfig, "grasp network training diverged");
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  net->eval();
  return result;
}

}  // namespace

GraspNetTraining train_grasp_net(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                 const GraspNetConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorCode::kEmptySplit, "grasp network training split is empty");
  if (val.empty()) throw Error(ErrorCode::kEmptySplit, "grasp network validation split is empty");
  return train_on(stack_samples(train, cfg), stack_samples(val, cfg), cfg, on_epoch);
}

GraspNetTraining train_grasp_net(const std::filesystem::path& dataset, const GraspNetConfig& cfg,
                                 const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  for (const auto split : {kTrainSplit, kValSplit}) {
    if (!std::filesystem::is_directory(dataset / split)) {
      throw Error(ErrorCode::kMissingSplit, "dataset has no '" + std::string(split) + "' split: " + dataset.string());
    }
    if (list_sample_dirs(dataset, split).empty()) {
      throw Error(ErrorCode::kEmptySplit, "grasp network " + std::string(split) + " split is empty");
    }
  }
  return train_on(stack_split(dataset, kTrainSplit, cfg), stack_split(dataset, kValSplit, cfg), cfg, on_epoch);
}

void save_grasp_net(const TrainedGraspNet& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  torch::save(model.net, (dir / "weights.pt").string());
  ordered_json manifest = {
      {"kind", "graspnet"},
      {"format_version", 1},
      {"fingerprint", model.fingerprint},
      {"approach_branch", model.approach_branch},
      {"normalization",
       {{"cx", "cx / (W - 1)"}, {"cy", "cy / (H - 1)"}, {"theta", "theta_deg / 180"}, {"width", "width_px / gripper_max_width"}}},
      {"config", graspnet_config_json(model.config)}};
  write_manifest(dir, manifest);
}

TrainedGraspNet load_grasp_net(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir, "graspnet");
  const auto& c = manifest.at("config");
  TrainedGraspNet model;
  auto& cfg = model.config;
  cfg.epochs = c.at("epochs").get<int>();
  cfg.batch_size = c.at("batch_size").get<int>();
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.part_channels = c.at("part_channels").get<std::vector<int>>();
  cfg.approach_depth = c.at("approach_depth").get<int>();
  cfg.fused_depth = c.at("fused_depth").get<int>();
  cfg.output_dim = c.at("output_dim").get<int>();
  cfg.gripper_max_width = c.at("gripper_max_width").get<double>();
  cfg.grasp_height = c.at("grasp_height").get<double>();
  cfg.coord_channels = c.at("coord_channels").get<bool>();
  cfg.shuffle_slots = c.value("shuffle_slots", false);
  cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.deterministic = c.at("deterministic").get<bool>();
  cfg.validate();
  model.fingerprint = manifest.at("fingerprint").get<std::string>();
  model.approach_branch = manifest.at("approach_branch").get<std::string>();
  model.net = GraspNet(cfg);
  torch::load(model.net, (dir / "weights.pt").string());
  model.net->eval();
  return model;
}

GraspRectangle predict_grasp(const TrainedGraspNet& model, const cv::Mat& object_image, const cv::Mat& approach_image,
                             const std::vector<Detection>& detections) {
  const GraspOutput o = model.forward(object_image, approach_image, detections);
  return denormalize_grasp(o, object_image.cols, object_image.rows, model.config.gripper_max_width,
                           model.config.grasp_height);
}

GraspSource grasp_source(const TrainedGraspNet& model) {
  return [&model](const Sample& s, const std::vector<Detection>& detections) {
    return predict_grasp(model, s.object_image, s.approach_image, detections);
  };
}

}  // namespace elemgrasp
