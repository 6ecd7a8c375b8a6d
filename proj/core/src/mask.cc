#include "maskcontrast/mask.h"

#include <algorithm>
#include <string>

MC_NAMESPACE_BEGIN

ObjectMask::ObjectMask(int height, int width)
    : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0) {
  if (height <= 0 || width <= 0) throw ShapeError("mask dimensions must be positive");
}

ObjectMask::ObjectMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (height <= 0 || width <= 0) throw ShapeError("mask dimensions must be positive");
  if (bits_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ShapeError("mask of " + std::to_string(height) + "x" + std::to_string(width) + " given " +
                     std::to_string(bits_.size()) + " values");
  }
  for (auto b : bits_)
    if (b > 1) throw DataError("mask values must be 0 or 1");
}

std::int64_t ObjectMask::count() const { return std::count(bits_.begin(), bits_.end(), std::uint8_t{1}); }

double ObjectMask::fraction() const {
  return bits_.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(bits_.size());
}

std::vector<std::int64_t> ObjectMask::foreground() const {
  std::vector<std::int64_t> idx;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) idx.push_back(static_cast<std::int64_t>(i));
  return idx;
}

PixelBox bounding_box(const ObjectMask& mask) {
  PixelBox box{mask.height(), mask.width(), 0, 0};
  bool any = false;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(y, x)) continue;
      any = true;
      box.top = std::min(box.top, y);
      box.left = std::min(box.left, x);
      box.bottom = std::max(box.bottom, y + 1);
      box.right = std::max(box.right, x + 1);
    }
  if (!any) throw DataError("bounding box of an empty mask");
  return box;
}

MC_NAMESPACE_END
