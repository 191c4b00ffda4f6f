#include "elemgrasp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Keeps the part of `subject` on the left of the directed edge a->b
// (positive-area side for a positively wound clipper).
Polygon clip_half_plane(const Polygon& subject, const Point2& a,
                        const Point2& b) {
  Polygon out;
  if (subject.empty()) return out;
  out.reserve(subject.size() + 2);
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& cur = subject[i];
    const Point2& nxt = subject[(i + 1) % n];
    const double dc = cross(a, b, cur);
    const double dn = cross(a, b, nxt);
    const bool cur_in = dc >= 0.0;
    const bool nxt_in = dn >= 0.0;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

Polygon positively_wound(std::span<const Point2> poly) {
  Polygon out(poly.begin(), poly.end());
  if (signed_area(out) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

double normalize_theta(double theta_deg) {
  double t = std::fmod(theta_deg, 180.0);
  if (t < 0.0) t += 180.0;
  if (t >= 180.0) t -= 180.0;  // fmod rounding on tiny negatives
  return t;
}

double normalize_yaw(double yaw_deg) {
  double t = std::fmod(yaw_deg, 360.0);
  if (t < 0.0) t += 360.0;
  if (t >= 360.0) t -= 360.0;
  return t;
}

GraspRectangle::GraspRectangle(double cx, double cy, double theta_deg,
                               double width_px, double height_px)
    : cx_(cx),
      cy_(cy),
      theta_deg_(normalize_theta(theta_deg)),
      width_px_(width_px),
      height_px_(height_px) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(theta_deg) ||
      !std::isfinite(width_px) || !std::isfinite(height_px)) {
    throw Error(ErrorCode::kSchemaViolation, "grasp rectangle has non-finite field");
  }
  if (!(width_px > 0.0) || !(height_px > 0.0)) {
    throw Error(ErrorCode::kSchemaViolation,
                "grasp rectangle width and height must be positive");
  }
}

std::array<Point2, 4> rect_corners(const GraspRectangle& r) {
  const double t = r.theta_deg() * kDegToRad;
  // u: jaw-opening axis, v: fingertip axis.
  const Point2 u{std::cos(t), -std::sin(t)};
  const Point2 v{std::sin(t), std::cos(t)};
  const double a = r.width_px() / 2.0;
  const double b = r.height_px() / 2.0;
  const Point2 c = r.center();
  auto at = [&](double su, double sv) {
    return Point2{c.x + su * a * u.x + sv * b * v.x,
                  c.y + su * a * u.y + sv * b * v.y};
  };
  return {at(-1, -1), at(1, -1), at(1, 1), at(-1, 1)};
}

double signed_area(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = polygon[i];
    const Point2& q = polygon[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return twice / 2.0;
}

double convex_intersection_area(std::span<const Point2> p,
                                std::span<const Point2> q) {
  if (p.size() < 3 || q.size() < 3) return 0.0;
  const Polygon clipper = positively_wound(q);
  if (signed_area(clipper) <= 0.0) return 0.0;
  Polygon subject = positively_wound(p);
  if (signed_area(subject) <= 0.0) return 0.0;
  const std::size_t n = clipper.size();
  for (std::size_t i = 0; i < n && !subject.empty(); ++i) {
    subject = clip_half_plane(subject, clipper[i], clipper[(i + 1) % n]);
  }
  return std::max(0.0, signed_area(subject));
}

double jaccard(const GraspRectangle& g, const GraspRectangle& g_hat) {
  const auto a = rect_corners(g);
  const auto b = rect_corners(g_hat);
  const double inter = convex_intersection_area(a, b);
  const double uni = g.area() + g_hat.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double angle_diff(double a_deg, double b_deg) {
  const double d = normalize_theta(std::fabs(a_deg - b_deg));
  return std::min(d, 180.0 - d);
}

bool meets_criteria(double jaccard_value, double angle_diff_deg, const SuccessCriteria& criteria) {
  return angle_diff_deg < criteria.angle_threshold_deg && jaccard_value > criteria.jaccard_threshold;
}

bool grasp_success(const GraspRectangle& g, const GraspRectangle& g_hat,
                   const SuccessCriteria& criteria) {
  return meets_criteria(jaccard(g, g_hat), angle_diff(g.theta_deg(), g_hat.theta_deg()), criteria);
}

BinaryMask::BinaryMask(int width, int height)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::kDimensionMismatch, "negative mask dimensions");
  }
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 0 || height < 0 ||
      bits_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask bit count does not match width x height");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

bool BinaryMask::contains(double x, double y) const {
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  if (!std::isfinite(xf) || !std::isfinite(yf)) return false;
  const long xi = static_cast<long>(xf);
  const long yi = static_cast<long>(yf);
  if (xi < 0 || yi < 0 || xi >= width_ || yi >= height_) return false;
  return at(static_cast<int>(xi), static_cast<int>(yi));
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "dice on masks of different sizes");
  }
  std::size_t ca = 0, cb = 0, both = 0;
  const auto& ba = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    ca += ba[i];
    cb += bb[i];
    both += ba[i] & bb[i];
  }
  if (ca + cb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(ca + cb);
}

BinaryMask rasterize_rect(const GraspRectangle& r, int width, int height) {
  BinaryMask mask(width, height);
  const auto corners = rect_corners(r);
  double min_x = corners[0].x, max_x = corners[0].x;
  double min_y = corners[0].y, max_y = corners[0].y;
  for (const auto& c : corners) {
    min_x = std::min(min_x, c.x);
    max_x = std::max(max_x, c.x);
    min_y = std::min(min_y, c.y);
    max_y = std::max(max_y, c.y);
  }
  // Pixel (x, y) has its center at (x + 0.5, y + 0.5).
  auto first = [](double lo, int n) {
    return static_cast<int>(std::clamp(std::ceil(lo - 0.5), 0.0, static_cast<double>(n)));
  };
  auto last = [](double hi, int n) {
    return static_cast<int>(std::clamp(std::floor(hi - 0.5), -1.0, n - 1.0));
  };
  const int x0 = first(min_x, width), x1 = last(max_x, width);
  const int y0 = first(min_y, height), y1 = last(max_y, height);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Point2 p{x + 0.5, y + 0.5};
      bool inside = true;
      for (std::size_t i = 0; i < 4 && inside; ++i) {
        inside = cross(corners[i], corners[(i + 1) % 4], p) >= 0.0;
      }
      if (inside) mask.set(x, y, true);
    }
  }
  return mask;
}

}  // namespace elemgrasp
