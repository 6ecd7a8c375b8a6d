#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maskcontrast/mask.h"
#include "maskcontrast/rng.h"
#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

/// SimCLR-style view sampling restricted to views that keep part of the
/// salient object. Geometric transforms hit image and mask alike; photometric
/// ones only the image.
struct AugmentConfig {
  double crop_scale_min = 0.5;
  double crop_scale_max = 1.0;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  double flip_prob = 0.5;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double grayscale_prob = 0.2;
  /// A view is accepted when its foreground fraction exceeds this.
  double min_object_area = 0.10;
  int max_retries = 10;
  int output_height = 32;
  int output_width = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Crop window in source pixel units (continuous coordinates).
struct CropBox {
  double top = 0;
  double left = 0;
  double height = 0;
  double width = 0;
};

struct View {
  Tensor image;  // [3,H,W], values in [0,1]
  ObjectMask mask;
};

/// Samples one augmented view. Tries up to max_retries random crops whose
/// mask fraction exceeds min_object_area, then falls back to the tightest box
/// around the object.
View sample_view(const Tensor& image, const ObjectMask& mask, const AugmentConfig& config, Rng& rng);

/// Bilinear (half-pixel) resampling of the crop window to out_h x out_w.
Tensor crop_resize_bilinear(const Tensor& image, const CropBox& box, int out_h, int out_w);
/// Nearest-neighbour resampling of the crop window; stays binary.
ObjectMask crop_resize_nearest(const ObjectMask& mask, const CropBox& box, int out_h, int out_w);

Tensor hflip(const Tensor& image);
ObjectMask hflip(const ObjectMask& mask);

/// Channel-affine jitter, each factor multiplicative around 1; result clamped
/// to [0,1]. Applied in the order brightness, contrast, saturation.
void color_jitter(Tensor& image, double brightness, double contrast, double saturation);
void to_grayscale(Tensor& image);

/// Flat salient-pixel indices per image and the batch target of each salient
/// pixel: every salient pixel of image n receives target n.
struct Remap {
  std::vector<std::vector<std::int64_t>> pixels;
  std::vector<int> targets;
  std::int64_t salient_pixels() const { return static_cast<std::int64_t>(targets.size()); }
};
Remap remap(std::span<const ObjectMask> masks);

MC_NAMESPACE_END
