#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "elemgrasp/config.hpp"
#include "elemgrasp/geometry.hpp"
#include "elemgrasp/scene.hpp"
#include "json.hpp"

namespace elemgrasp {

namespace fs = std::filesystem;

enum class SeenSplit { kTrainObject, kNovelObject };

std::string_view seen_split_name(SeenSplit s);
SeenSplit seen_split_from_name(std::string_view name);

inline constexpr std::string_view kTrainSplit = "train";
inline constexpr std::string_view kValSplit = "val";
inline constexpr std::string_view kNovelSplit = "novel";

struct Sample {
  std::string id;
  cv::Mat object_image;    // top view, no gripper
  cv::Mat approach_image;  // oblique view with gripper glyph
  std::vector<ElementInstance> elements;
  GraspRectangle grasp;
  ApproachPose approach;
  std::string object_name;
  SeenSplit seen_split = SeenSplit::kTrainObject;
  /// Augmentation chain applied to produce this sample, oldest first.
  nlohmann::ordered_json transforms = nlohmann::ordered_json::array();
};

/// Field-for-field equality, images and masks compared bit-exactly.
bool samples_equal(const Sample& a, const Sample& b);

/// Violated Sample invariants, empty when the sample is well-formed.
std::vector<std::string> check_sample(const Sample& s);

struct GenerationConfig {
  std::vector<std::string> templates = train_template_names();
  std::vector<std::string> novel_templates;
  int count = 100;
  int novel_count = 0;
  std::uint64_t seed = 1;
  std::vector<Color> colors;
  double val_fraction = 0.2;
  double gripper_max_width = 80.0;
  double grasp_height = 30.0;
  double z_min = 0.3;
  double z_max = 1.0;
  PlacementRanges placement;

  /// Reads the `[dataset]` section; throws Error(kConfig) on invalid values
  /// or unknown template names.
  static GenerationConfig from_config(const KeyValueConfig& cfg);
  void validate() const;
};

std::vector<Color> default_colors();

/// Parses "#rrggbb" into a BGR color.
Color parse_hex_color(std::string_view hex);

/// One synthetic sample from `template_name`, fully determined by
/// `stream_seed`. Scenes that clip the frame or are ungraspable are redrawn.
Sample generate_sample(const GenerationConfig& cfg, const std::string& template_name,
                       std::uint64_t stream_seed, const std::string& id, SeenSplit seen);

/// Draws an approach pose over element `target` of `elements`.
ApproachPose sample_approach(std::span<const ElementInstance> elements, std::size_t target,
                             double z_min, double z_max, Rng& rng);

struct DatasetSummary {
  std::map<std::string, int> split_counts;
};

/// Number of validation samples for `n` samples at `val_fraction`.
int validation_count(int n, double val_fraction);

/// Writes `<root>/<split>/<id>/...` for splits train, val and (when novel
/// templates are configured) novel. `root` must be absent or empty.
DatasetSummary generate_dataset(const GenerationConfig& cfg, const fs::path& root);

/// Writes object.png, approach.png, mask_<k>.png and annotation.json.
void write_sample(const Sample& s, const fs::path& dir);

/// Throws Error with kMissingFile, kSchemaViolation or kDimensionMismatch.
Sample read_sample(const fs::path& dir);

nlohmann::ordered_json annotation_json(const Sample& s);

/// Sample directories of a split, sorted by name. Empty if the split is absent.
std::vector<fs::path> list_sample_dirs(const fs::path& root, std::string_view split);
std::vector<Sample> load_split(const fs::path& root, std::string_view split);

struct Violation {
  std::string sample_id;
  std::string path;
  std::string message;
};

std::vector<Violation> validate_dataset(const fs::path& root);

/// SHA-256 over sorted relative paths and file bytes.
std::string dataset_checksum(const fs::path& root);

/// Root-level file ignored by dataset_checksum.
inline constexpr std::string_view kRunManifestName = "run_manifest.json";

/// SHA-256 hex digest of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace elemgrasp
