#include "elemgrasp/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

using nlohmann::ordered_json;

namespace {

std::string_view noise_model_name(NoiseModel m) {
  switch (m) {
    case NoiseModel::kGaussian: return "gaussian";
    case NoiseModel::kIso: return "iso";
    case NoiseModel::kMultiplicative: return "multiplicative";
  }
  return "?";
}

NoiseModel noise_model_from_name(const std::string& name) {
  for (auto m : {NoiseModel::kGaussian, NoiseModel::kIso, NoiseModel::kMultiplicative}) {
    if (noise_model_name(m) == name) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown noise model '" + name + "'");
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kConfig, std::string(name) + " must be a probability in [0, 1]");
  }
}

Sample discard_if_invalid(Sample s) {
  const auto problems = check_sample(s);
  if (!problems.empty()) throw Error(ErrorCode::kDiscardAugmentation, problems.front());
  return s;
}


}  // namespace

AugmentConfig AugmentConfig::from_config(const KeyValueConfig& cfg) {
  AugmentConfig out;
  out.rotation_max_deg = cfg.get_double("augment.rotation_max_deg", out.rotation_max_deg);
  out.rotate_prob = cfg.get_double("augment.rotate_prob", out.rotate_prob);
  out.hflip_prob = cfg.get_double("augment.hflip_prob", out.hflip_prob);
  out.vflip_prob = cfg.get_double("augment.vflip_prob", out.vflip_prob);
  out.noise_prob = cfg.get_double("augment.noise_prob", out.noise_prob);
  if (cfg.has("augment.noise_models")) {
    out.noise_models.clear();
    for (const auto& n : cfg.get_list("augment.noise_models", {})) {
      out.noise_models.push_back(noise_model_from_name(n));
    }
  }
  out.gaussian_sigma = cfg.get_double("augment.gaussian_sigma", out.gaussian_sigma);
  out.iso_strength = cfg.get_double("augment.iso_strength", out.iso_strength);
  out.multiplicative_strength =
      cfg.get_double("augment.multiplicative_strength", out.multiplicative_strength);
  out.brightness_contrast_prob =
      cfg.get_double("augment.brightness_contrast_prob", out.brightness_contrast_prob);
  out.brightness_range = cfg.get_double("augment.brightness_range", out.brightness_range);
  out.contrast_range = cfg.get_double("augment.contrast_range", out.contrast_range);
  out.dropout_prob = cfg.get_double("augment.dropout_prob", out.dropout_prob);
  out.dropout_fraction = cfg.get_double("augment.dropout_fraction", out.dropout_fraction);
  out.gripper_color_shift = cfg.get_bool("augment.gripper_color_shift", out.gripper_color_shift);
  out.gripper_color_prob = cfg.get_double("augment.gripper_color_prob", out.gripper_color_prob);
  out.gripper_shift_max = cfg.get_double("augment.gripper_shift_max", out.gripper_shift_max);
  out.splits = cfg.get_list("augment.splits", out.splits);
  out.seed = static_cast<std::uint64_t>(cfg.get_int("augment.seed", static_cast<long long>(out.seed)));
  out.max_retries = static_cast<int>(cfg.get_int("augment.max_retries", out.max_retries));
  out.validate();
  return out;
}

void AugmentConfig::validate() const {
  if (!(rotation_max_deg >= 0.0 && rotation_max_deg <= 45.0)) {
    throw Error(ErrorCode::kConfig, "rotation_max_deg must be in [0, 45]");
  }
  check_probability(rotate_prob, "rotate_prob");
  check_probability(hflip_prob, "hflip_prob");
  check_probability(vflip_prob, "vflip_prob");
  check_probability(noise_prob, "noise_prob");
  check_probability(brightness_contrast_prob, "brightness_contrast_prob");
  check_probability(dropout_prob, "dropout_prob");
  check_probability(gripper_color_prob, "gripper_color_prob");
  check_probability(dropout_fraction, "dropout_fraction");
  if (noise_prob > 0 && noise_models.empty()) {
    throw Error(ErrorCode::kConfig, "noise enabled without noise models");
  }
  for (double v : {gaussian_sigma, iso_strength, multiplicative_strength, brightness_range,
                   contrast_range, gripper_shift_max}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kConfig, "augmentation strength outside [0, 1]");
  }
  if (max_retries < 1) throw Error(ErrorCode::kConfig, "max_retries must be at least 1");
  for (const auto& s : splits) {
    if (s != kTrainSplit && s != kValSplit && s != kNovelSplit) {
      throw Error(ErrorCode::kConfig, "unknown split '" + s + "'");
    }
  }
}

Sample rotate_sample(const Sample& s, double angle_deg) {
  if (!(std::fabs(angle_deg) <= 45.0)) {
    throw Error(ErrorCode::kConfig, "rotation angle must be within [-45, 45] degrees");
  }
  if (angle_deg == 0.0) return s;
  const cv::Size size = s.object_image.size();
  const Point2 center{size.width / 2.0, size.height / 2.0};
  // Same matrix for pixel indices and continuous coordinates, because the
  // rotation center is expressed in both frames consistently.
  const cv::Mat rot =
      cv::getRotationMatrix2D(cv::Point2f(static_cast<float>(center.x - 0.5),
                                          static_cast<float>(center.y - 0.5)),
                              angle_deg, 1.0);
  const double a = rot.at<double>(0, 0), b = rot.at<double>(0, 1);
  auto map_point = [&](double x, double y) {
    const double dx = x - center.x, dy = y - center.y;
    return Point2{center.x + a * dx + b * dy, center.y - b * dx + a * dy};
  };

  Sample out = s;
  const Color bg = background_color();
  cv::warpAffine(s.object_image, out.object_image, rot, size, cv::INTER_LINEAR,
                 cv::BORDER_CONSTANT, cv::Scalar(bg[0], bg[1], bg[2]));
  for (auto& e : out.elements) {
    cv::Mat warped;
    cv::warpAffine(mask_to_mat(e.mask), warped, rot, size, cv::INTER_NEAREST,
                   cv::BORDER_CONSTANT, cv::Scalar(0));
    e.mask = mat_to_mask(warped);
  }
  const Point2 c = map_point(s.grasp.cx(), s.grasp.cy());
  if (!(c.x >= 0 && c.x < size.width && c.y >= 0 && c.y < size.height)) {
    throw Error(ErrorCode::kDiscardAugmentation, "rotated grasp center leaves the frame");
  }
  out.grasp = GraspRectangle(c.x, c.y, s.grasp.theta_deg() + angle_deg, s.grasp.width_px(),
                             s.grasp.height_px());
  const Point2 p = map_point(s.approach.x, s.approach.y);
  out.approach.x = p.x;
  out.approach.y = p.y;
  out.approach.yaw_deg = normalize_yaw(s.approach.yaw_deg + angle_deg);
  out.approach_image = render_approach(out.object_image, out.approach);
  return discard_if_invalid(std::move(out));
}

Sample flip_sample(const Sample& s, FlipAxis axis) {
  const bool horizontal = axis == FlipAxis::kHorizontal;
  const int code = horizontal ? 1 : 0;
  const double w = s.object_image.cols, h = s.object_image.rows;
  Sample out = s;
  cv::flip(s.object_image, out.object_image, code);
  for (auto& e : out.elements) {
    cv::Mat flipped;
    cv::flip(mask_to_mat(e.mask), flipped, code);
    e.mask = mat_to_mask(flipped);
  }
  const double cx = horizontal ? w - s.grasp.cx() : s.grasp.cx();
  const double cy = horizontal ? s.grasp.cy() : h - s.grasp.cy();
  out.grasp = GraspRectangle(cx, cy, 180.0 - s.grasp.theta_deg(), s.grasp.width_px(),
                             s.grasp.height_px());
  if (horizontal) {
    out.approach.x = w - s.approach.x;
    out.approach.yaw_deg = normalize_yaw(180.0 - s.approach.yaw_deg);
  } else {
    out.approach.y = h - s.approach.y;
    out.approach.yaw_deg = normalize_yaw(360.0 - s.approach.yaw_deg);
  }
  out.approach_image = render_approach(out.object_image, out.approach);
  return discard_if_invalid(std::move(out));
}

namespace {

void add_noise(cv::Mat& img, NoiseModel model, double strength, Rng& rng) {
  if (strength <= 0.0) return;
  const double s255 = strength * 255.0;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int y = 0; y < img.rows; ++y) {
    auto* row = img.ptr<Color>(y);
    for (int x = 0; x < img.cols; ++x) {
      Color& px = row[x];
      switch (model) {
        case NoiseModel::kGaussian:
          for (int ch = 0; ch < 3; ++ch) {
            px[ch] = cv::saturate_cast<std::uint8_t>(px[ch] + s255 * unit(rng));
          }
          break;
        case NoiseModel::kIso: {
          // shot-like luminance noise plus weaker per-channel chroma noise
          const double lum = (px[0] + px[1] + px[2]) / (3.0 * 255.0);
          const double l = s255 * std::sqrt(lum) * unit(rng);
          for (int ch = 0; ch < 3; ++ch) {
            px[ch] = cv::saturate_cast<std::uint8_t>(px[ch] + l + 0.5 * s255 * unit(rng));
          }
          break;
        }
        case NoiseModel::kMultiplicative: {
          const double gain = uniform(rng, 1.0 - strength, 1.0 + strength);
          for (int ch = 0; ch < 3; ++ch) {
            px[ch] = cv::saturate_cast<std::uint8_t>(px[ch] * gain);
          }
          break;
        }
      }
    }
  }
}

void brightness_contrast(cv::Mat& img, double brightness, double contrast) {
  img.convertTo(img, CV_8UC3, contrast, 128.0 * (1.0 - contrast) + brightness * 255.0);
}

void dropout(cv::Mat& img, double fraction, std::uint8_t fill, Rng& rng) {
  if (fraction <= 0.0) return;
  std::bernoulli_distribution drop(fraction);
  for (int y = 0; y < img.rows; ++y) {
    auto* row = img.ptr<Color>(y);
    for (int x = 0; x < img.cols; ++x) {
      if (drop(rng)) row[x] = Color(fill, fill, fill);
    }
  }
}

}  // namespace

Sample photometric(const Sample& s, PhotometricKind kind, const PhotometricParams& params,
                   Rng& rng) {
  Sample out = s;
  out.object_image = s.object_image.clone();
  out.approach_image = s.approach_image.clone();
  switch (kind) {
    case PhotometricKind::kNoise:
      add_noise(out.object_image, params.noise_model, params.strength, rng);
      add_noise(out.approach_image, params.noise_model, params.strength, rng);
      break;
    case PhotometricKind::kBrightnessContrast:
      if (params.brightness != 0.0 || params.contrast != 1.0) {
        brightness_contrast(out.object_image, params.brightness, params.contrast);
        brightness_contrast(out.approach_image, params.brightness, params.contrast);
      }
      break;
    case PhotometricKind::kDropout:
      dropout(out.object_image, params.dropout_fraction, params.fill, rng);
      dropout(out.approach_image, params.dropout_fraction, params.fill, rng);
      break;
    case PhotometricKind::kGripperColor: {
      const BinaryMask glyph = gripper_glyph_mask(s.approach);
      for (int y = 0; y < out.approach_image.rows; ++y) {
        auto* row = out.approach_image.ptr<Color>(y);
        for (int x = 0; x < out.approach_image.cols; ++x) {
          if (!glyph.at(x, y)) continue;
          for (int ch = 0; ch < 3; ++ch) {
            row[x][ch] = cv::saturate_cast<std::uint8_t>(row[x][ch] + params.gripper_shift[ch] * 255.0);
          }
        }
      }
      break;
    }
  }
  return out;
}

Sample augment_sample(const Sample& s, const AugmentConfig& cfg, Rng& rng) {
  Sample out = s;
  ordered_json chain = ordered_json::array();
  if (bernoulli(rng, cfg.rotate_prob)) {
    const double angle = uniform(rng, -cfg.rotation_max_deg, cfg.rotation_max_deg);
    out = rotate_sample(out, angle);
    chain.push_back({{"op", "rotate"}, {"angle_deg", angle}});
  }
  if (bernoulli(rng, cfg.hflip_prob)) {
    out = flip_sample(out, FlipAxis::kHorizontal);
    chain.push_back({{"op", "flip"}, {"axis", "horizontal"}});
  }
  if (bernoulli(rng, cfg.vflip_prob)) {
    out = flip_sample(out, FlipAxis::kVertical);
    chain.push_back({{"op", "flip"}, {"axis", "vertical"}});
  }
  if (bernoulli(rng, cfg.noise_prob)) {
    PhotometricParams p;
    p.noise_model = cfg.noise_models[std::uniform_int_distribution<std::size_t>(
        0, cfg.noise_models.size() - 1)(rng)];
    const double full = p.noise_model == NoiseModel::kGaussian ? cfg.gaussian_sigma
                        : p.noise_model == NoiseModel::kIso    ? cfg.iso_strength
                                                               : cfg.multiplicative_strength;
    p.strength = uniform(rng, 0.5, 1.0) * full;
    out = photometric(out, PhotometricKind::kNoise, p, rng);
    chain.push_back({{"op", "noise"},
                     {"model", std::string(noise_model_name(p.noise_model))},
                     {"strength", p.strength}});
  }
  if (bernoulli(rng, cfg.brightness_contrast_prob)) {
    PhotometricParams p;
    p.brightness = uniform(rng, -cfg.brightness_range, cfg.brightness_range);
    p.contrast = uniform(rng, 1.0 - cfg.contrast_range, 1.0 + cfg.contrast_range);
    out = photometric(out, PhotometricKind::kBrightnessContrast, p, rng);
    chain.push_back(
        {{"op", "brightness_contrast"}, {"brightness", p.brightness}, {"contrast", p.contrast}});
  }
  if (bernoulli(rng, cfg.dropout_prob)) {
    PhotometricParams p;
    p.dropout_fraction = cfg.dropout_fraction;
    out = photometric(out, PhotometricKind::kDropout, p, rng);
    chain.push_back({{"op", "dropout"}, {"fraction", p.dropout_fraction}});
  }
  if (cfg.gripper_color_shift && bernoulli(rng, cfg.gripper_color_prob)) {
    PhotometricParams p;
    for (int ch = 0; ch < 3; ++ch) {
      p.gripper_shift[ch] = uniform(rng, -cfg.gripper_shift_max, cfg.gripper_shift_max);
    }
    out = photometric(out, PhotometricKind::kGripperColor, p, rng);
    chain.push_back({{"op", "gripper_color"},
                     {"shift_bgr", {p.gripper_shift[0], p.gripper_shift[1], p.gripper_shift[2]}}});
  }
  for (auto& step : chain) out.transforms.push_back(step);
  return out;
}

AugmentSummary augment_dataset(const fs::path& src, const fs::path& dst,
                               const AugmentConfig& cfg, int multiplier) {
  cfg.validate();
  if (multiplier < 1) throw Error(ErrorCode::kConfig, "multiplier must be at least 1");
  if (!fs::is_directory(src)) throw Error(ErrorCode::kMissingFile, "no dataset at " + src.string());
  if (fs::exists(dst) && !fs::is_empty(dst)) {
    throw Error(ErrorCode::kIo, "output directory is not empty: " + dst.string());
  }
  fs::create_directories(dst);

  AugmentSummary summary;
  std::map<std::string, int> split_counts;
  std::uint64_t index = 0;
  for (const auto split : {kTrainSplit, kValSplit, kNovelSplit}) {
    const auto dirs = list_sample_dirs(src, split);
    if (dirs.empty()) continue;
    const bool augment =
        std::find(cfg.splits.begin(), cfg.splits.end(), std::string(split)) != cfg.splits.end();
    int& count = split_counts[std::string(split)];
    for (const auto& dir : dirs) {
      const fs::path out_dir = dst / split / dir.filename();
      fs::create_directories(out_dir.parent_path());
      fs::copy(dir, out_dir, fs::copy_options::recursive);
      ++summary.originals;
      ++count;
      const std::uint64_t sample_seed = derive_seed(cfg.seed, index++);
      if (!augment || multiplier == 1) continue;
      const Sample original = read_sample(dir);
      for (int m = 1; m < multiplier; ++m) {
        Rng rng(derive_seed(sample_seed, static_cast<std::uint64_t>(m)));
        bool written = false;
        for (int attempt = 0; attempt < cfg.max_retries && !written; ++attempt) {
          try {
            Sample aug = augment_sample(original, cfg, rng);
            aug.id = original.id + "_a" + std::to_string(m);
            write_sample(aug, dst / split / aug.id);
            written = true;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kDiscardAugmentation) throw;
          }
        }
        if (written) {
          ++summary.emitted;
          ++count;
        } else {
          ++summary.skipped;
        }
      }
    }
  }

  ordered_json manifest;
  if (fs::exists(src / "dataset.json")) {
    std::ifstream in(src / "dataset.json");
    manifest = ordered_json::parse(in, nullptr, false);
    if (manifest.is_discarded()) manifest = ordered_json::object();
  }
  manifest["split_counts"] = split_counts;
  manifest["augmentation"] = {{"multiplier", multiplier},
                              {"seed", cfg.seed},
                              {"splits", cfg.splits},
                              {"emitted", summary.emitted},
                              {"skipped", summary.skipped}};
  std::ofstream out(dst / "dataset.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dst / "dataset.json").string());
  return summary;
}

}  // namespace elemgrasp
