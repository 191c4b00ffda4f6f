#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace elemgrasp {

// Pixel frame: origin top-left, x right, y down. Angles are measured
// counterclockwise as seen on screen, so direction theta is
// (cos theta, -sin theta) in pixel coordinates. Pixel (i, j) covers
// [i, i+1) x [j, j+1), so its center is (i + 0.5, j + 0.5).

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using Polygon = std::vector<Point2>;

/// Oriented grasp rectangle. `width_px` is the jaw opening (measured along
/// the theta direction), `height_px` the fingertip line length.
class GraspRectangle {
 public:
  GraspRectangle() = default;

  /// Throws Error(kSchemaViolation) when width or height is not positive or
  /// any value is non-finite. theta is folded into [0, 180).
  GraspRectangle(double cx, double cy, double theta_deg, double width_px,
                 double height_px);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double theta_deg() const { return theta_deg_; }
  double width_px() const { return width_px_; }
  double height_px() const { return height_px_; }
  Point2 center() const { return {cx_, cy_}; }
  double area() const { return width_px_ * height_px_; }

  friend bool operator==(const GraspRectangle&, const GraspRectangle&) = default;

 private:
  double cx_ = 0.0;
  double cy_ = 0.0;
  double theta_deg_ = 0.0;
  double width_px_ = 1.0;
  double height_px_ = 1.0;
};

/// Fold any angle into [0, 180).
double normalize_theta(double theta_deg);

/// Fold any angle into [0, 360).
double normalize_yaw(double yaw_deg);

/// Corners ordered with positive shoelace area.
std::array<Point2, 4> rect_corners(const GraspRectangle& r);

/// Signed shoelace area; positive for the winding rect_corners produces.
double signed_area(std::span<const Point2> polygon);

/// Area of the intersection of two convex polygons by half-plane clipping.
/// Either winding is accepted; degenerate inputs yield 0.
double convex_intersection_area(std::span<const Point2> p,
                                std::span<const Point2> q);

double jaccard(const GraspRectangle& g, const GraspRectangle& g_hat);

/// Symmetric mod-180 distance, in [0, 90].
double angle_diff(double a_deg, double b_deg);

struct SuccessCriteria {
  double jaccard_threshold = 0.25;
  double angle_threshold_deg = 30.0;
};

/// Both comparisons are strict: angle_diff < angle threshold and
/// jaccard > jaccard threshold.
bool meets_criteria(double jaccard_value, double angle_diff_deg, const SuccessCriteria& criteria = {});

/// meets_criteria applied to the pair's Jaccard and angle difference.
bool grasp_success(const GraspRectangle& g, const GraspRectangle& g_hat,
                   const SuccessCriteria& criteria = {});

/// Row-major binary raster.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty_extent() const { return width_ == 0 || height_ == 0; }

  bool at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  /// True when the pixel containing continuous point (x, y) is set.
  bool contains(double x, double y) const;

  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Dice similarity, 1.0 when both masks are empty. Throws
/// Error(kDimensionMismatch) when the sizes differ.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Pixel (x, y) is set iff its center (x + 0.5, y + 0.5) lies inside the
/// rectangle (boundary inclusive).
BinaryMask rasterize_rect(const GraspRectangle& r, int width, int height);

}  // namespace elemgrasp
