#include "elemgrasp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <openssl/evp.h>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

using nlohmann::ordered_json;

std::string_view seen_split_name(SeenSplit s) {
  return s == SeenSplit::kTrainObject ? "train-object" : "novel-object";
}

SeenSplit seen_split_from_name(std::string_view name) {
  if (name == "train-object") return SeenSplit::kTrainObject;
  if (name == "novel-object") return SeenSplit::kNovelObject;
  throw Error(ErrorCode::kSchemaViolation, "unknown seen_split '" + std::string(name) + "'");
}

bool samples_equal(const Sample& a, const Sample& b) {
  return a.id == b.id && images_equal(a.object_image, b.object_image) &&
         images_equal(a.approach_image, b.approach_image) && a.elements == b.elements &&
         a.grasp == b.grasp && a.approach == b.approach && a.object_name == b.object_name &&
         a.seen_split == b.seen_split && a.transforms == b.transforms;
}

std::vector<std::string> check_sample(const Sample& s) {
  std::vector<std::string> problems;
  auto fail = [&](std::string m) { problems.push_back(std::move(m)); };
  if (s.id.empty()) fail("empty sample id");
  if (s.object_image.empty() || s.object_image.type() != CV_8UC3) {
    fail("object image missing or not 8-bit RGB");
    return problems;
  }
  const int w = s.object_image.cols, h = s.object_image.rows;
  if (s.approach_image.size() != s.object_image.size() ||
      s.approach_image.type() != CV_8UC3) {
    fail("approach image size or type differs from the object image");
  }
  if (s.elements.empty() || s.elements.size() > 3) fail("sample must have 1 to 3 elements");
  std::optional<BinaryMask> all;
  for (std::size_t k = 0; k < s.elements.size(); ++k) {
    const auto& e = s.elements[k];
    if (e.mask.width() != w || e.mask.height() != h) {
      fail("mask " + std::to_string(k) + " dimensions differ from the object image");
      continue;
    }
    if (e.mask.count() == 0) fail("mask " + std::to_string(k) + " is empty");
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) {
      fail("mask " + std::to_string(k) + " confidence outside [0, 1]");
    }
    all = all ? mask_union(*all, e.mask) : e.mask;
  }
  if (all && !all->contains(s.grasp.cx(), s.grasp.cy())) {
    fail("grasp center lies outside every element mask");
  }
  if (!(s.approach.x >= 0 && s.approach.x < w && s.approach.y >= 0 && s.approach.y < h)) {
    fail("approach position outside the image");
  }
  if (!(s.approach.z >= 0)) fail("approach height is negative");
  if (!(s.approach.yaw_deg >= 0 && s.approach.yaw_deg < 360)) fail("approach yaw outside [0, 360)");
  return problems;
}

std::vector<Color> default_colors() {
  return {parse_hex_color("#c83232"), parse_hex_color("#3ca046"), parse_hex_color("#325ac8"),
          parse_hex_color("#dcbe32"), parse_hex_color("#e68228"), parse_hex_color("#8c46aa"),
          parse_hex_color("#28a0a0"), parse_hex_color("#8c5a32")};
}

Color parse_hex_color(std::string_view hex) {
  if (hex.size() != 7 || hex[0] != '#') {
    throw Error(ErrorCode::kConfig, "color must look like #rrggbb: " + std::string(hex));
  }
  unsigned value = 0;
  for (char ch : hex.substr(1)) {
    value <<= 4;
    if (ch >= '0' && ch <= '9') value |= ch - '0';
    else if (ch >= 'a' && ch <= 'f') value |= ch - 'a' + 10;
    else if (ch >= 'A' && ch <= 'F') value |= ch - 'A' + 10;
    else throw Error(ErrorCode::kConfig, "bad hex digit in color " + std::string(hex));
  }
  return Color(value & 0xff, (value >> 8) & 0xff, (value >> 16) & 0xff);
}

GenerationConfig GenerationConfig::from_config(const KeyValueConfig& cfg) {
  GenerationConfig out;
  out.templates = cfg.get_list("dataset.templates", out.templates);
  out.novel_templates = cfg.get_list("dataset.novel_templates", out.novel_templates);
  out.count = static_cast<int>(cfg.get_int("dataset.count", out.count));
  out.novel_count = static_cast<int>(cfg.get_int("dataset.novel_count", out.novel_count));
  out.seed = static_cast<std::uint64_t>(cfg.get_int("dataset.seed", static_cast<long long>(out.seed)));
  for (const auto& c : cfg.get_list("dataset.colors", {})) out.colors.push_back(parse_hex_color(c));
  out.val_fraction = cfg.get_double("dataset.val_fraction", out.val_fraction);
  out.gripper_max_width = cfg.get_double("dataset.gripper_max_width", out.gripper_max_width);
  out.grasp_height = cfg.get_double("dataset.grasp_height", out.grasp_height);
  out.z_min = cfg.get_double("dataset.z_min", out.z_min);
  out.z_max = cfg.get_double("dataset.z_max", out.z_max);
  out.validate();
  return out;
}

void GenerationConfig::validate() const {
  if (templates.empty()) throw Error(ErrorCode::kConfig, "no templates configured");
  for (const auto& t : templates) find_template(t);
  for (const auto& t : novel_templates) {
    find_template(t);
    if (std::find(templates.begin(), templates.end(), t) != templates.end()) {
      throw Error(ErrorCode::kConfig, "template '" + t + "' is both seen and novel");
    }
  }
  if (count < 0 || novel_count < 0) throw Error(ErrorCode::kConfig, "negative sample count");
  if (novel_count > 0 && novel_templates.empty()) {
    throw Error(ErrorCode::kConfig, "novel_count set without novel templates");
  }
  if (!(val_fraction >= 0 && val_fraction < 1)) {
    throw Error(ErrorCode::kConfig, "val_fraction must be in [0, 1)");
  }
  if (!(gripper_max_width > 0) || !(grasp_height > 0)) {
    throw Error(ErrorCode::kConfig, "gripper_max_width and grasp_height must be positive");
  }
  if (!(z_min >= 0 && z_max >= z_min)) throw Error(ErrorCode::kConfig, "bad z range");
}

ApproachPose sample_approach(std::span<const ElementInstance> elements, std::size_t target,
                             double z_min, double z_max, Rng& rng) {
  const BinaryMask& mask = elements[target].mask;
  const Point2 c = mask_centroid(mask);
  const std::size_t n = mask.count();
  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  Point2 p{};
  for (int y = 0, seen = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) && static_cast<std::size_t>(seen++) == pick) p = {x + 0.5, y + 0.5};
    }
  }
  // Rings are approached over the band; solid parts near their middle.
  if (mask.contains(c.x, c.y)) p = {c.x + 0.3 * (p.x - c.x), c.y + 0.3 * (p.y - c.y)};
  ApproachPose pose;
  pose.x = p.x;
  pose.y = p.y;
  pose.z = uniform(rng, z_min, z_max);
  pose.yaw_deg = normalize_yaw(uniform(rng, 0.0, 360.0));
  return pose;
}

namespace {

bool touches_border(const BinaryMask& m) {
  for (int x = 0; x < m.width(); ++x) {
    if (m.at(x, 0) || m.at(x, m.height() - 1)) return true;
  }
  for (int y = 0; y < m.height(); ++y) {
    if (m.at(0, y) || m.at(m.width() - 1, y)) return true;
  }
  return false;
}

}  // namespace

Sample generate_sample(const GenerationConfig& cfg, const std::string& template_name,
                       std::uint64_t stream_seed, const std::string& id, SeenSplit seen) {
  const ObjectTemplate& tmpl = find_template(template_name);
  const std::vector<Color> colors = cfg.colors.empty() ? default_colors() : cfg.colors;
  Rng rng(stream_seed);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    SceneSpec spec;
    spec.object = tmpl;
    spec.color = colors[std::uniform_int_distribution<std::size_t>(0, colors.size() - 1)(rng)];
    spec.ranges = cfg.placement;
    RenderedObject scene;
    try {
      scene = render_object(spec, rng);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kRejectScene) continue;
      throw;
    }
    if (std::any_of(scene.elements.begin(), scene.elements.end(),
                    [](const ElementInstance& e) { return touches_border(e.mask); })) {
      continue;
    }
    const std::size_t target =
        std::uniform_int_distribution<std::size_t>(0, scene.elements.size() - 1)(rng);
    const ApproachPose approach = sample_approach(scene.elements, target, cfg.z_min, cfg.z_max, rng);
    Sample s;
    try {
      s.grasp = derive_grasp_for_approach(scene.elements, approach, cfg.gripper_max_width,
                                          cfg.grasp_height);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUngraspable) continue;
      throw;
    }
    s.id = id;
    s.object_image = scene.image;
    s.approach_image = render_approach(scene.image, approach);
    s.elements = std::move(scene.elements);
    s.approach = approach;
    s.object_name = tmpl.name;
    s.seen_split = seen;
    return s;
  }
  throw Error(ErrorCode::kRejectScene,
              "could not place template '" + template_name + "' inside the frame");
}

int validation_count(int n, double val_fraction) {
  return static_cast<int>(std::llround(n * val_fraction));
}

namespace {

std::string make_id(char prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%05d", prefix, index);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

DatasetSummary generate_dataset(const GenerationConfig& cfg, const fs::path& root) {
  cfg.validate();
  if (fs::exists(root) && !fs::is_empty(root)) {
    throw Error(ErrorCode::kIo, "output directory is not empty: " + root.string());
  }
  fs::create_directories(root);

  const int n_val = validation_count(cfg.count, cfg.val_fraction);
  std::vector<int> order(cfg.count);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, 0xA11CE));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<bool> is_val(cfg.count, false);
  for (int i = 0; i < n_val; ++i) is_val[order[i]] = true;

  DatasetSummary summary;
  summary.split_counts[std::string(kTrainSplit)] = 0;
  summary.split_counts[std::string(kValSplit)] = 0;
  for (int i = 0; i < cfg.count; ++i) {
    const std::string& tmpl = cfg.templates[i % cfg.templates.size()];
    const std::string id = make_id('s', i);
    Sample s = generate_sample(cfg, tmpl, derive_seed(cfg.seed, i), id, SeenSplit::kTrainObject);
    const std::string split(is_val[i] ? kValSplit : kTrainSplit);
    write_sample(s, root / split / id);
    ++summary.split_counts[split];
  }
  if (cfg.novel_count > 0) {
    summary.split_counts[std::string(kNovelSplit)] = 0;
    for (int i = 0; i < cfg.novel_count; ++i) {
      const std::string& tmpl = cfg.novel_templates[i % cfg.novel_templates.size()];
      const std::string id = make_id('n', i);
      Sample s = generate_sample(cfg, tmpl, derive_seed(cfg.seed ^ 0x5EEDULL, i), id,
                                 SeenSplit::kNovelObject);
      write_sample(s, root / kNovelSplit / id);
      ++summary.split_counts[std::string(kNovelSplit)];
    }
  }

  ordered_json manifest;
  manifest["format"] = "elemgrasp-dataset/1";
  manifest["seed"] = cfg.seed;
  manifest["templates"] = cfg.templates;
  manifest["novel_templates"] = cfg.novel_templates;
  manifest["val_fraction"] = cfg.val_fraction;
  manifest["gripper_max_width"] = cfg.gripper_max_width;
  manifest["grasp_height"] = cfg.grasp_height;
  manifest["split_counts"] = summary.split_counts;
  write_text(root / "dataset.json", manifest.dump(2) + "\n");
  return summary;
}

ordered_json annotation_json(const Sample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["object_name"] = s.object_name;
  ordered_json classes = ordered_json::array();
  for (const auto& e : s.elements) classes.push_back(std::string(class_name(e.element_class)));
  j["element_classes"] = classes;
  j["grasp"] = {{"cx", s.grasp.cx()},
                {"cy", s.grasp.cy()},
                {"theta_deg", s.grasp.theta_deg()},
                {"width_px", s.grasp.width_px()},
                {"height_px", s.grasp.height_px()}};
  j["approach"] = {{"x", s.approach.x},
                   {"y", s.approach.y},
                   {"z", s.approach.z},
                   {"yaw_deg", s.approach.yaw_deg}};
  j["seen_split"] = std::string(seen_split_name(s.seen_split));
  j["transforms"] = s.transforms;
  return j;
}

void write_sample(const Sample& s, const fs::path& dir) {
  fs::create_directories(dir);
  auto write_png = [&](const fs::path& p, const cv::Mat& m) {
    if (!cv::imwrite(p.string(), m)) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  };
  write_png(dir / "object.png", s.object_image);
  write_png(dir / "approach.png", s.approach_image);
  for (std::size_t k = 0; k < s.elements.size(); ++k) {
    write_png(dir / ("mask_" + std::to_string(k) + ".png"), mask_to_mat(s.elements[k].mask));
  }
  write_text(dir / "annotation.json", annotation_json(s).dump(2) + "\n");
}

namespace {

cv::Mat read_png(const fs::path& p, int flags) {
  if (!fs::exists(p)) throw Error(ErrorCode::kMissingFile, "missing " + p.string());
  cv::Mat m = cv::imread(p.string(), flags);
  if (m.empty()) throw Error(ErrorCode::kSchemaViolation, "unreadable image " + p.string());
  return m;
}

template <typename T>
T field(const ordered_json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kSchemaViolation,
                std::string("missing field '") + key + "' in " + where.string());
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kSchemaViolation,
                std::string("field '") + key + "' has the wrong type in " + where.string());
  }
}

}  // namespace

Sample read_sample(const fs::path& dir) {
  const fs::path ann_path = dir / "annotation.json";
  if (!fs::exists(ann_path)) throw Error(ErrorCode::kMissingFile, "missing " + ann_path.string());
  ordered_json j;
  {
    std::ifstream in(ann_path);
    try {
      j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, "malformed " + ann_path.string() + ": " + e.what());
    }
  }
  if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, ann_path.string() + " is not an object");

  Sample s;
  s.id = field<std::string>(j, "id", ann_path);
  s.object_name = field<std::string>(j, "object_name", ann_path);
  s.seen_split = seen_split_from_name(field<std::string>(j, "seen_split", ann_path));
  const auto classes = field<std::vector<std::string>>(j, "element_classes", ann_path);
  const auto grasp = field<ordered_json>(j, "grasp", ann_path);
  s.grasp = GraspRectangle(field<double>(grasp, "cx", ann_path), field<double>(grasp, "cy", ann_path),
                           field<double>(grasp, "theta_deg", ann_path),
                           field<double>(grasp, "width_px", ann_path),
                           field<double>(grasp, "height_px", ann_path));
  const auto approach = field<ordered_json>(j, "approach", ann_path);
  s.approach.x = field<double>(approach, "x", ann_path);
  s.approach.y = field<double>(approach, "y", ann_path);
  s.approach.z = field<double>(approach, "z", ann_path);
  s.approach.yaw_deg = normalize_yaw(field<double>(approach, "yaw_deg", ann_path));
  if (j.contains("transforms")) {
    s.transforms = j["transforms"];
    if (!s.transforms.is_array()) {
      throw Error(ErrorCode::kSchemaViolation, "transforms must be an array in " + ann_path.string());
    }
  }

  s.object_image = read_png(dir / "object.png", cv::IMREAD_COLOR);
  s.approach_image = read_png(dir / "approach.png", cv::IMREAD_COLOR);
  if (s.approach_image.size() != s.object_image.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "approach and object images differ in size in " + dir.string());
  }
  for (std::size_t k = 0; k < classes.size(); ++k) {
    ElementInstance e;
    try {
      e.element_class = class_from_name(classes[k]);
    } catch (const Error&) {
      throw Error(ErrorCode::kInvalidClass, "unknown element class '" + classes[k] + "' in " + ann_path.string());
    }
    const cv::Mat m = read_png(dir / ("mask_" + std::to_string(k) + ".png"), cv::IMREAD_GRAYSCALE);
    if (m.size() != s.object_image.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "mask_" + std::to_string(k) + ".png size differs from object.png in " + dir.string());
    }
    e.mask = mat_to_mask(m);
    e.confidence = 1.0;
    s.elements.push_back(std::move(e));
  }
  return s;
}

std::vector<fs::path> list_sample_dirs(const fs::path& root, std::string_view split) {
  std::vector<fs::path> out;
  const fs::path dir = root / split;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Sample> load_split(const fs::path& root, std::string_view split) {
  std::vector<Sample> out;
  for (const auto& dir : list_sample_dirs(root, split)) out.push_back(read_sample(dir));
  return out;
}

std::vector<Violation> validate_dataset(const fs::path& root) {
  std::vector<Violation> out;
  if (!fs::is_directory(root)) {
    out.push_back({"", root.string(), "dataset root does not exist"});
    return out;
  }
  std::map<std::string, std::string> id_owner;
  for (const auto split : {kTrainSplit, kValSplit, kNovelSplit}) {
    for (const auto& dir : list_sample_dirs(root, split)) {
      const std::string dir_id = dir.filename().string();
      Sample s;
      try {
        s = read_sample(dir);
      } catch (const Error& e) {
        out.push_back({dir_id, dir.string(), e.what()});
        continue;
      }
      for (auto& problem : check_sample(s)) out.push_back({s.id, dir.string(), problem});
      if (s.id != dir_id) out.push_back({s.id, dir.string(), "annotation id differs from directory name"});
      const auto [it, fresh] = id_owner.emplace(s.id, std::string(split));
      if (!fresh) {
        out.push_back({s.id, dir.string(), "sample id also present in split '" + it->second + "'"});
      }
      if (split == kTrainSplit && s.seen_split == SeenSplit::kNovelObject) {
        out.push_back({s.id, dir.string(), "novel-object sample in the train split"});
      }
    }
  }
  return out;
}

namespace {

std::string to_hex(const unsigned char* digest, unsigned int len) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  return to_hex(digest, len);
}

std::string dataset_checksum(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    // The CLI's per-run record is not part of the data.
    if (entry.path().parent_path() == root && entry.path().filename() == kRunManifestName) continue;
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::vector<std::pair<std::string, fs::path>> rel;
  for (const auto& f : files) rel.emplace_back(fs::relative(f, root).generic_string(), f);
  std::sort(rel.begin(), rel.end());

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& [name, path] : rel) {
    EVP_DigestUpdate(ctx, name.data(), name.size() + 1);  // include the NUL separator
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    const std::uint64_t size = bytes.size();
    EVP_DigestUpdate(ctx, &size, sizeof size);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  return to_hex(digest, len);
}

}  // namespace elemgrasp
