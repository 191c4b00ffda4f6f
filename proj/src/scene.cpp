#include "elemgrasp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Point2 direction(double angle_deg) {
  const double t = angle_deg * kDegToRad;
  return {std::cos(t), -std::sin(t)};
}

Point2 normal_of(double angle_deg) {
  const double t = angle_deg * kDegToRad;
  return {std::sin(t), std::cos(t)};
}

double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }

std::vector<ObjectTemplate> make_templates() {
  using C = ElementClass;
  // offsets, angles and sizes are in the object frame at scale 1
  return {
      {"mug", {{C::kCylinder, 0, 0, 0, 56, 40}, {C::kRing, 0, 27, 0, 30, 7}}},
      {"beer-bottle", {{C::kCylinder, -14, 0, 0, 62, 34}, {C::kStick, 36, 0, 0, 42, 11}}},
      {"cubic-bottle", {{C::kCuboid, -8, 0, 0, 54, 38}, {C::kCylinder, 28, 0, 0, 18, 22}}},
      {"padlock", {{C::kRing, 0, -22, 0, 34, 7}, {C::kCuboid, 0, 8, 0, 50, 32}}},
      {"hammer", {{C::kStick, -10, 0, 0, 92, 9}, {C::kCuboid, 42, 0, 90, 50, 22}}},
      {"rattle", {{C::kStick, 22, 0, 0, 62, 9}, {C::kSphere, -28, 0, 0, 42, 42}}},
      {"key",
       {{C::kStick, 8, 0, 0, 52, 9}, {C::kCuboid, 30, 11, 90, 20, 12}, {C::kRing, -32, 0, 0, 34, 8}}},
      {"ball", {{C::kSphere, 0, 0, 0, 54, 54}}},
      {"flashlight", {{C::kCylinder, -10, 0, 0, 60, 24}, {C::kCuboid, 28, 0, 90, 34, 16}}},
      {"donut", {{C::kRing, 0, 0, 0, 58, 12}}},
      // held out from training
      {"goblet", {{C::kStick, 22, 0, 0, 46, 9}, {C::kRing, -24, 0, 0, 48, 8}}},
      {"banana-stick", {{C::kStick, -4, 0, 0, 86, 11}, {C::kSphere, 46, 0, 0, 28, 28}}},
      {"bowl", {{C::kRing, 0, 0, 0, 68, 12}, {C::kCuboid, 42, 0, 90, 22, 12}}},
  };
}

}  // namespace

std::string_view class_name(ElementClass c) {
  switch (c) {
    case ElementClass::kCuboid: return "cuboid";
    case ElementClass::kSphere: return "sphere";
    case ElementClass::kCylinder: return "cylinder";
    case ElementClass::kRing: return "ring";
    case ElementClass::kStick: return "stick";
  }
  return "?";
}

ElementClass class_from_name(std::string_view name) {
  for (auto c : kAllElementClasses) {
    if (class_name(c) == name) return c;
  }
  throw Error(ErrorCode::kInvalidClass, "unknown element class '" + std::string(name) + "'");
}

bool class_name_less(ElementClass a, ElementClass b) {
  return class_name(a) < class_name(b);
}

const std::vector<ObjectTemplate>& builtin_templates() {
  static const std::vector<ObjectTemplate> templates = make_templates();
  return templates;
}

const std::vector<std::string>& train_template_names() {
  static const std::vector<std::string> names = {
      "mug",    "beer-bottle", "cubic-bottle", "padlock",    "hammer",
      "rattle", "key",         "ball",         "flashlight", "donut"};
  return names;
}

const std::vector<std::string>& novel_template_names() {
  static const std::vector<std::string> names = {"goblet", "banana-stick", "bowl"};
  return names;
}

const ObjectTemplate& find_template(std::string_view name) {
  for (const auto& t : builtin_templates()) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kConfig, "unknown object template '" + std::string(name) + "'");
}

bool PlacedElement::contains(const Point2& p) const {
  const Point2 d{p.x - center.x, p.y - center.y};
  switch (element_class) {
    case ElementClass::kSphere:
      return dot(d, d) <= (length / 2) * (length / 2);
    case ElementClass::kRing: {
      const double r = std::sqrt(dot(d, d));
      const double outer = length / 2;
      return r <= outer && r >= outer - thickness;
    }
    default: {
      const double along = dot(d, direction(angle_deg));
      const double across = dot(d, normal_of(angle_deg));
      return std::fabs(along) <= length / 2 && std::fabs(across) <= thickness / 2;
    }
  }
}

double PlacedElement::shade(const Point2& p) const {
  const Point2 d{p.x - center.x, p.y - center.y};
  auto bulge = [](double s) { return 0.42 + 0.58 * std::sqrt(std::max(0.0, 1.0 - s * s)); };
  switch (element_class) {
    case ElementClass::kCuboid: {
      const double along = std::fabs(dot(d, direction(angle_deg)));
      const double across = std::fabs(dot(d, normal_of(angle_deg)));
      const double edge = std::min(length / 2 - along, thickness / 2 - across);
      return edge < 2.0 ? 0.6 : 0.92;
    }
    case ElementClass::kCylinder: {
      const double along = std::fabs(dot(d, direction(angle_deg)));
      const double across = dot(d, normal_of(angle_deg));
      double f = bulge(across / (thickness / 2));
      if (length / 2 - along < 2.0) f *= 0.8;
      return f;
    }
    case ElementClass::kStick:
      return 0.55;
    case ElementClass::kSphere: {
      const double radius = length / 2;
      const double r = std::sqrt(dot(d, d)) / radius;
      double f = 0.3 + 0.7 * std::sqrt(std::max(0.0, 1.0 - r * r));
      const double hx = d.x + 0.35 * radius, hy = d.y + 0.35 * radius;
      if (hx * hx + hy * hy < 0.04 * radius * radius) f = 1.0;
      return f;
    }
    case ElementClass::kRing: {
      const double mid = length / 2 - thickness / 2;
      return bulge((std::sqrt(dot(d, d)) - mid) / (thickness / 2));
    }
  }
  return 1.0;
}

Color background_color() { return Color{186, 200, 210}; }

RenderedObject render_placed(std::span<const PlacedElement> placed, const Color& color,
                             std::uint64_t texture_seed) {
  RenderedObject out;
  out.image = cv::Mat(kImageSize, kImageSize, CV_8UC3, cv::Scalar(background_color()[0],
                                                                  background_color()[1],
                                                                  background_color()[2]));
  Rng texture(texture_seed);
  std::normal_distribution<double> grain(0.0, 3.0);
  std::vector<double> noise(static_cast<std::size_t>(kImageSize) * kImageSize);
  for (auto& n : noise) n = grain(texture);

  for (int y = 0; y < kImageSize; ++y) {
    auto* row = out.image.ptr<Color>(y);
    for (int x = 0; x < kImageSize; ++x) {
      const double n = noise[static_cast<std::size_t>(y) * kImageSize + x];
      for (int ch = 0; ch < 3; ++ch) {
        row[x][ch] = cv::saturate_cast<std::uint8_t>(row[x][ch] + n);
      }
    }
  }

  for (const auto& el : placed) {
    BinaryMask mask(kImageSize, kImageSize);
    const double reach = std::hypot(el.length, el.thickness) / 2 + 1;
    const int x0 = std::clamp(static_cast<int>(std::floor(el.center.x - reach)), 0, kImageSize);
    const int x1 = std::clamp(static_cast<int>(std::ceil(el.center.x + reach)), 0, kImageSize);
    const int y0 = std::clamp(static_cast<int>(std::floor(el.center.y - reach)), 0, kImageSize);
    const int y1 = std::clamp(static_cast<int>(std::ceil(el.center.y + reach)), 0, kImageSize);
    for (int y = y0; y < y1; ++y) {
      auto* row = out.image.ptr<Color>(y);
      for (int x = x0; x < x1; ++x) {
        const Point2 p{x + 0.5, y + 0.5};
        if (!el.contains(p)) continue;
        mask.set(x, y, true);
        const double f = el.shade(p);
        const double n = noise[static_cast<std::size_t>(y) * kImageSize + x];
        for (int ch = 0; ch < 3; ++ch) {
          row[x][ch] = cv::saturate_cast<std::uint8_t>(color[ch] * f + n);
        }
      }
    }
    out.elements.push_back({el.element_class, std::move(mask), 1.0});
  }
  out.placed.assign(placed.begin(), placed.end());
  return out;
}

RenderedObject render_object(const SceneSpec& spec, Rng& rng) {
  if (spec.object.elements.empty() || spec.object.elements.size() > 3) {
    throw Error(ErrorCode::kConfig, "object template must have 1 to 3 elements");
  }
  const double scale = uniform(rng, spec.ranges.scale_min, spec.ranges.scale_max);
  const double rotation = uniform(rng, 0.0, 360.0);
  const double cx = uniform(rng, spec.ranges.center_min, spec.ranges.center_max);
  const double cy = uniform(rng, spec.ranges.center_min, spec.ranges.center_max);
  const std::uint64_t texture_seed = rng();

  const Point2 ax = direction(rotation);
  const Point2 ay = normal_of(rotation);
  std::vector<PlacedElement> placed;
  for (const auto& e : spec.object.elements) {
    if (!(e.length > 0) || !(e.thickness > 0)) {
      throw Error(ErrorCode::kConfig, "element sizes must be positive");
    }
    const double ox = e.offset_x * scale, oy = e.offset_y * scale;
    placed.push_back({e.element_class,
                      {cx + ox * ax.x + oy * ay.x, cy + ox * ax.y + oy * ay.y},
                      normalize_yaw(e.angle_deg + rotation),
                      e.length * scale,
                      e.thickness * scale});
  }
  RenderedObject out = render_placed(placed, spec.color, texture_seed);
  for (const auto& inst : out.elements) {
    if (inst.mask.count() == 0) {
      throw Error(ErrorCode::kRejectScene, "element rendered fully outside the frame");
    }
  }
  return out;
}

namespace {

constexpr double kViewScale = 1.1;
constexpr double kViewFlatten = 0.6;
constexpr double kViewShift = 12.0;
constexpr double kLiftPixels = 30.0;

}  // namespace

Point2 project_to_approach_view(double x, double y, double z) {
  const double half = kImageSize / 2.0;
  const double dx = x - half, dy = y - half;
  const double u = half + kViewScale * (dx - dy) / std::numbers::sqrt2;
  const double v = half + kViewShift +
                   kViewFlatten * kViewScale * (dx + dy) / std::numbers::sqrt2 -
                   z * kLiftPixels;
  return {u, v};
}

BinaryMask gripper_glyph_mask(const ApproachPose& approach) {
  constexpr double kFingerOffset = 14.0;
  constexpr double kFingerHalfLength = 9.0;
  constexpr double kHalfThickness = 2.5;
  const Point2 c = project_to_approach_view(approach.x, approach.y, approach.z);
  const Point2 a = direction(approach.yaw_deg);
  const Point2 b = normal_of(approach.yaw_deg);
  BinaryMask mask(kImageSize, kImageSize);
  const int r = static_cast<int>(kFingerOffset + kFingerHalfLength + 2);
  for (int y = std::max(0, static_cast<int>(c.y) - r);
       y < std::min(kImageSize, static_cast<int>(c.y) + r + 1); ++y) {
    for (int x = std::max(0, static_cast<int>(c.x) - r);
         x < std::min(kImageSize, static_cast<int>(c.x) + r + 1); ++x) {
      const Point2 d{x + 0.5 - c.x, y + 0.5 - c.y};
      const double along = dot(d, a);
      const double across = dot(d, b);
      const bool finger = std::fabs(std::fabs(along) - kFingerOffset) <= kHalfThickness &&
                          std::fabs(across) <= kFingerHalfLength;
      const bool bar = std::fabs(along) <= kFingerOffset && std::fabs(across) <= kHalfThickness;
      if (finger || bar) mask.set(x, y, true);
    }
  }
  return mask;
}

cv::Mat render_approach(const cv::Mat& object_image, const ApproachPose& approach) {
  // Forward map (continuous coords): p_view = M p_top + t. OpenCV indexes
  // pixels by their centers, hence the half-pixel shifts.
  const double half = kImageSize / 2.0;
  const double k = kViewScale / std::numbers::sqrt2;
  const cv::Matx22d m(k, -k, kViewFlatten * k, kViewFlatten * k);
  const cv::Vec2d t(half - k * (half - half),
                    half + kViewShift - kViewFlatten * k * (half + half));
  const cv::Matx22d minv = m.inv();
  // src_idx = minv * (dst_idx + 0.5 - t) - 0.5
  const cv::Vec2d off = minv * (cv::Vec2d(0.5, 0.5) - t) - cv::Vec2d(0.5, 0.5);
  const cv::Mat map = (cv::Mat_<double>(2, 3) << minv(0, 0), minv(0, 1), off[0],
                       minv(1, 0), minv(1, 1), off[1]);
  const Color bg = background_color();
  cv::Mat view;
  cv::warpAffine(object_image, view, map, object_image.size(),
                 cv::INTER_LINEAR | cv::WARP_INVERSE_MAP, cv::BORDER_CONSTANT,
                 cv::Scalar(bg[0] * 0.8, bg[1] * 0.8, bg[2] * 0.8));

  // shadow under the gripper, on the table plane
  const Point2 s = project_to_approach_view(approach.x, approach.y, 0.0);
  for (int y = 0; y < view.rows; ++y) {
    auto* row = view.ptr<Color>(y);
    for (int x = 0; x < view.cols; ++x) {
      const double ex = (x + 0.5 - s.x) / 9.0, ey = (y + 0.5 - s.y) / 4.5;
      if (ex * ex + ey * ey <= 1.0) {
        for (int ch = 0; ch < 3; ++ch) row[x][ch] = static_cast<std::uint8_t>(row[x][ch] / 2);
      }
    }
  }
  const BinaryMask glyph = gripper_glyph_mask(approach);
  for (int y = 0; y < view.rows; ++y) {
    auto* row = view.ptr<Color>(y);
    for (int x = 0; x < view.cols; ++x) {
      if (glyph.at(x, y)) row[x] = kGripperColor;
    }
  }
  return view;
}

std::size_t approached_element(std::span<const ElementInstance> elements,
                               const ApproachPose& approach) {
  if (elements.empty()) {
    throw Error(ErrorCode::kSchemaViolation, "no elements to grasp");
  }
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  std::size_t best_area = 0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const Point2 c = mask_centroid(elements[i].mask);
    const std::size_t area = elements[i].mask.count();
    if (area == 0) continue;
    const double dist = std::hypot(c.x - approach.x, c.y - approach.y);
    const bool better =
        dist < best_dist ||
        (dist == best_dist &&
         (area < best_area ||
          (area == best_area &&
           class_name_less(elements[i].element_class, elements[best].element_class))));
    if (better) {
      best = i;
      best_dist = dist;
      best_area = area;
    }
  }
  if (!std::isfinite(best_dist)) {
    throw Error(ErrorCode::kSchemaViolation, "all element masks are empty");
  }
  return best;
}

namespace {

constexpr double kIsotropyThreshold = 0.15;
constexpr double kWidthMargin = 1.2;

// Extent of the mask's pixel centers projected on `axis`, plus one pixel.
double extent_along(const BinaryMask& mask, const Point2& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const double p = (x + 0.5) * axis.x + (y + 0.5) * axis.y;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  return hi - lo + 1.0;
}

GraspRectangle finish(Point2 center, double theta, double extent, double gripper_max_width,
                      double grasp_height) {
  if (extent > gripper_max_width) {
    throw Error(ErrorCode::kUngraspable, "element wider than the gripper opening");
  }
  const double width = std::min(extent * kWidthMargin, gripper_max_width);
  return GraspRectangle(center.x, center.y, theta, width, grasp_height);
}

}  // namespace

GraspRectangle derive_grasp_for_approach(std::span<const ElementInstance> elements,
                                         const ApproachPose& approach,
                                         double gripper_max_width, double grasp_height) {
  if (!(gripper_max_width > 0)) {
    throw Error(ErrorCode::kConfig, "gripper_max_width must be positive");
  }
  const BinaryMask& mask = elements[approached_element(elements, approach)].mask;
  const Point2 c = mask_centroid(mask);

  if (mask.contains(c.x, c.y)) {
    double sxx = 0, syy = 0, sxy = 0;
    std::size_t n = 0;
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (!mask.at(x, y)) continue;
        const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
        ++n;
      }
    }
    sxx /= n;
    syy /= n;
    sxy /= n;
    const double spread = std::sqrt((sxx - syy) * (sxx - syy) + 4 * sxy * sxy);
    double theta = 0.0;
    if (spread / (sxx + syy) >= kIsotropyThreshold) {
      // major axis (cos a, sin a) in y-down pixels is screen angle -a
      const double major = -0.5 * std::atan2(2 * sxy, sxx - syy) / kDegToRad;
      theta = major + 90.0;
    }
    return finish(c, theta, extent_along(mask, direction(theta)), gripper_max_width,
                  grasp_height);
  }

  // Centroid in a hole: grasp the band where the ray toward the approach
  // point crosses it.
  Point2 d{approach.x - c.x, approach.y - c.y};
  double norm = std::hypot(d.x, d.y);
  if (norm < 1e-9) {
    d = direction(approach.yaw_deg);
    norm = 1.0;
  }
  d = {d.x / norm, d.y / norm};
  constexpr double kStep = 0.25;
  const double limit = 2.0 * std::max(mask.width(), mask.height());
  double enter = -1.0, exit = -1.0;
  for (double t = 0.0; t <= limit; t += kStep) {
    const bool inside = mask.contains(c.x + t * d.x, c.y + t * d.y);
    if (inside && enter < 0) enter = t;
    if (inside) exit = t;
    if (!inside && enter >= 0) break;
  }
  if (enter < 0) {
    throw Error(ErrorCode::kUngraspable, "no graspable band along the approach ray");
  }
  const double mid = (enter + exit) / 2;
  const Point2 center{c.x + mid * d.x, c.y + mid * d.y};
  const double theta = std::atan2(-d.y, d.x) / kDegToRad;
  return finish(center, theta, exit - enter + 1.0, gripper_max_width, grasp_height);
}

}  // namespace elemgrasp
