#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "elemgrasp/geometry.hpp"
#include "elemgrasp/image.hpp"
#include "elemgrasp/rng.hpp"

namespace elemgrasp {

enum class ElementClass { kCuboid = 0, kSphere, kCylinder, kRing, kStick };

inline constexpr int kNumElementClasses = 5;
inline constexpr std::array<ElementClass, kNumElementClasses> kAllElementClasses = {
    ElementClass::kCuboid, ElementClass::kSphere, ElementClass::kCylinder,
    ElementClass::kRing, ElementClass::kStick};

std::string_view class_name(ElementClass c);
/// Throws Error(kInvalidClass) for unknown names.
ElementClass class_from_name(std::string_view name);
/// Lexicographic order of class names, used for deterministic tie-breaks.
bool class_name_less(ElementClass a, ElementClass b);

struct ElementInstance {
  ElementClass element_class = ElementClass::kCuboid;
  BinaryMask mask;
  double confidence = 1.0;

  friend bool operator==(const ElementInstance&, const ElementInstance&) = default;
};

/// 4-DOF approach of the gripper: planar position in top-view pixels,
/// height in abstract units, yaw in degrees.
struct ApproachPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw_deg = 0.0;

  friend bool operator==(const ApproachPose&, const ApproachPose&) = default;
};

/// One primitive part in object-frame coordinates (pixels at scale 1).
/// `angle_deg` is the direction of the element's long axis; for spheres
/// `length` is the diameter, for rings the outer diameter with `thickness`
/// the band width.
struct ElementTemplate {
  ElementClass element_class;
  double offset_x;
  double offset_y;
  double angle_deg;
  double length;
  double thickness;
};

struct ObjectTemplate {
  std::string name;
  std::vector<ElementTemplate> elements;  // draw order, back to front
};

/// Built-in household-like templates; `train_template_names` lists the ten
/// used for training, `novel_template_names` the held-out ones.
const std::vector<ObjectTemplate>& builtin_templates();
const std::vector<std::string>& train_template_names();
const std::vector<std::string>& novel_template_names();
/// Throws Error(kConfig) for unknown names.
const ObjectTemplate& find_template(std::string_view name);

struct PlacementRanges {
  double center_min = 64.0;
  double center_max = 160.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
};

struct SceneSpec {
  ObjectTemplate object;
  Color color{40, 40, 200};
  PlacementRanges ranges;
  std::uint64_t seed = 0;
};

/// Element placed in image coordinates.
struct PlacedElement {
  ElementClass element_class;
  Point2 center;
  double angle_deg;
  double length;
  double thickness;

  bool contains(const Point2& p) const;
  /// Brightness factor in (0, 1] for a point inside the element.
  double shade(const Point2& p) const;
};

struct RenderedObject {
  cv::Mat image;  // CV_8UC3, kImageSize square
  std::vector<ElementInstance> elements;
  std::vector<PlacedElement> placed;
};

/// Places the template with a pose drawn from `rng` and renders the top
/// view. Masks are amodal (full footprint); later elements paint over
/// earlier ones in the image. Throws Error(kRejectScene) when an element
/// lands fully outside the frame.
RenderedObject render_object(const SceneSpec& spec, Rng& rng);

/// Renders already-placed elements; used by render_object.
RenderedObject render_placed(std::span<const PlacedElement> placed, const Color& color,
                             std::uint64_t texture_seed);

/// Table color behind objects.
Color background_color();

// Approach view: a fixed 45 degree oblique projection of the table plane,
// vertically foreshortened, with the gripper lifted by z.
Point2 project_to_approach_view(double x, double y, double z = 0.0);

/// Pixels covered by the gripper glyph (two fingers joined by a bar) in the
/// approach view.
BinaryMask gripper_glyph_mask(const ApproachPose& approach);

inline const Color kGripperColor{245, 245, 245};

/// Oblique view of `object_image` with the gripper glyph at the approach.
cv::Mat render_approach(const cv::Mat& object_image, const ApproachPose& approach);

/// Grasp label for an approach. The target element is the one whose mask
/// centroid is nearest to the approach point (ties: smaller area, then
/// class name). The grasp is centered on the target centroid with the jaws
/// closing across the principal axis; masks whose centroid falls outside
/// the mask (rings) are grasped on the band along the ray toward the
/// approach point. Throws Error(kUngraspable) when the part is wider than
/// the gripper, Error(kSchemaViolation) when `elements` is empty.
GraspRectangle derive_grasp_for_approach(std::span<const ElementInstance> elements,
                                         const ApproachPose& approach,
                                         double gripper_max_width,
                                         double grasp_height);

/// Index of the element the approach targets under the rule above.
std::size_t approached_element(std::span<const ElementInstance> elements,
                               const ApproachPose& approach);

}  // namespace elemgrasp
