#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maskcontrast/common.h"

MC_NAMESPACE_BEGIN

/// Binary per-pixel foreground indicator (1 = salient object), row-major.
class ObjectMask {
 public:
  ObjectMask() = default;
  ObjectMask(int height, int width);
  ObjectMask(int height, int width, std::vector<std::uint8_t> bits);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }

  std::uint8_t operator()(int y, int x) const { return bits_[static_cast<std::size_t>(y * width_ + x)]; }
  void set(int y, int x, bool on) { bits_[static_cast<std::size_t>(y * width_ + x)] = on ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::int64_t count() const;
  double fraction() const;
  bool empty() const { return count() == 0; }
  /// Flat indices of foreground pixels in raster order.
  std::vector<std::int64_t> foreground() const;

  friend bool operator==(const ObjectMask&, const ObjectMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Axis-aligned bounding box of the foreground, inclusive-exclusive.
struct PixelBox {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;
  int height() const { return bottom - top; }
  int width() const { return right - left; }
};
PixelBox bounding_box(const ObjectMask& mask);

/// Per-pixel class ids; 255 marks ignored pixels.
struct LabelMap {
  static constexpr int kIgnore = 255;
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> labels;
};

MC_NAMESPACE_END
