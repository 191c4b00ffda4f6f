#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elemgrasp/config.hpp"
#include "elemgrasp/dataset.hpp"
#include "elemgrasp/rng.hpp"

namespace elemgrasp {

enum class FlipAxis { kHorizontal, kVertical };

enum class NoiseModel { kGaussian, kIso, kMultiplicative };

enum class PhotometricKind { kNoise, kBrightnessContrast, kDropout, kGripperColor };

/// Strengths are fractions of the 8-bit range unless noted.
struct AugmentConfig {
  double rotation_max_deg = 45.0;
  double rotate_prob = 0.6;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;

  double noise_prob = 0.5;
  std::vector<NoiseModel> noise_models = {NoiseModel::kGaussian, NoiseModel::kIso,
                                          NoiseModel::kMultiplicative};
  double gaussian_sigma = 0.03;
  double iso_strength = 0.04;
  double multiplicative_strength = 0.1;  // gain drawn from [1 - s, 1 + s]

  double brightness_contrast_prob = 0.5;
  double brightness_range = 0.15;  // additive offset in [-r, r]
  double contrast_range = 0.2;     // gain in [1 - r, 1 + r]

  double dropout_prob = 0.3;
  double dropout_fraction = 0.02;

  bool gripper_color_shift = true;
  double gripper_color_prob = 0.5;
  double gripper_shift_max = 0.25;  // per-channel shift in [-s, s]

  std::vector<std::string> splits = {"train"};
  std::uint64_t seed = 7;
  int max_retries = 5;

  /// Reads the `[augment]` section.
  static AugmentConfig from_config(const KeyValueConfig& cfg);
  /// Throws Error(kConfig) for out-of-range values.
  void validate() const;
};

struct PhotometricParams {
  NoiseModel noise_model = NoiseModel::kGaussian;
  double strength = 0.0;
  double brightness = 0.0;
  double contrast = 1.0;
  double dropout_fraction = 0.0;
  std::uint8_t fill = 0;
  cv::Vec3d gripper_shift{0, 0, 0};  // fractions of 255, BGR
};

/// Rotates object image and masks about the image center by `angle_deg`
/// (counterclockwise on screen); the grasp and approach pose follow the same
/// map and the approach view is re-rendered. Throws
/// Error(kDiscardAugmentation) when the result violates a sample invariant.
Sample rotate_sample(const Sample& s, double angle_deg);

Sample flip_sample(const Sample& s, FlipAxis axis);

/// Pixel-only change; annotations are untouched. Noise, brightness/contrast
/// and dropout act on both views, the gripper color shift only on glyph
/// pixels of the approach view.
Sample photometric(const Sample& s, PhotometricKind kind, const PhotometricParams& params,
                   Rng& rng);

/// One random transform chain drawn from `cfg`, recorded in `transforms`.
Sample augment_sample(const Sample& s, const AugmentConfig& cfg, Rng& rng);

struct AugmentSummary {
  int originals = 0;
  int emitted = 0;  // augmented copies written
  int skipped = 0;  // copies abandoned after max_retries
};

/// Copies `src` to `dst` (which must be absent or empty), adding
/// `multiplier - 1` augmented copies of every sample in `cfg.splits`.
AugmentSummary augment_dataset(const fs::path& src, const fs::path& dst,
                               const AugmentConfig& cfg, int multiplier);

}  // namespace elemgrasp
