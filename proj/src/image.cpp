#include "elemgrasp/image.hpp"

#include <cstring>

#include "elemgrasp/errors.hpp"

namespace elemgrasp {

cv::Mat mask_to_mat(const BinaryMask& mask) {
  cv::Mat out(mask.height(), mask.width(), CV_8UC1);
  const auto& bits = mask.bits();
  for (int y = 0; y < mask.height(); ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width(); ++x) {
      row[x] = bits[static_cast<std::size_t>(y) * mask.width() + x] ? 255 : 0;
    }
  }
  return out;
}

BinaryMask mat_to_mask(const cv::Mat& mat) {
  if (mat.type() != CV_8UC1) {
    throw Error(ErrorCode::kDimensionMismatch, "mask image must be single-channel 8-bit");
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(mat.rows) * mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      bits[static_cast<std::size_t>(y) * mat.cols + x] = row[x] > 127 ? 1 : 0;
    }
  }
  return BinaryMask(mat.cols, mat.rows, std::move(bits));
}

bool images_equal(const cv::Mat& a, const cv::Mat& b) {
  if (a.type() != b.type() || a.size() != b.size()) return false;
  const std::size_t row_bytes = a.cols * a.elemSize();
  for (int y = 0; y < a.rows; ++y) {
    if (std::memcmp(a.ptr(y), b.ptr(y), row_bytes) != 0) return false;
  }
  return true;
}

Point2 mask_centroid(const BinaryMask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
    }
  }
  if (n == 0) return {-1.0, -1.0};
  return {sx / n, sy / n};
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask union of different sizes");
  }
  std::vector<std::uint8_t> bits(a.bits().size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = a.bits()[i] | b.bits()[i];
  return BinaryMask(a.width(), a.height(), std::move(bits));
}

}  // namespace elemgrasp
