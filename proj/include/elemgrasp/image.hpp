#pragma once

#include <opencv2/core.hpp>

#include "elemgrasp/geometry.hpp"

namespace elemgrasp {

inline constexpr int kImageSize = 224;

/// 8-bit BGR color, matching cv::Mat CV_8UC3 channel order.
using Color = cv::Vec3b;

/// 0/255 single-channel image from a mask.
cv::Mat mask_to_mat(const BinaryMask& mask);

/// Pixels > 127 become set. Throws Error(kDimensionMismatch) on non CV_8UC1.
BinaryMask mat_to_mask(const cv::Mat& mat);

/// Pixel-exact equality of two images (type, size, bytes).
bool images_equal(const cv::Mat& a, const cv::Mat& b);

/// Pixel-center centroid of a mask; (-1, -1) when empty.
Point2 mask_centroid(const BinaryMask& mask);

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

}  // namespace elemgrasp
