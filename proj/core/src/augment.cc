#include "maskcontrast/augment.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

MC_NAMESPACE_BEGIN

namespace {

Real clamp01(double v) { return static_cast<Real>(std::clamp(v, 0.0, 1.0)); }

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

void check_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("expected an RGB image [3,H,W], got " + shape_string(image.shape()));
  }
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(min_object_area > 0.0 && min_object_area < 1.0)) {
    throw DataError("min_object_area must lie in (0,1), got " + std::to_string(min_object_area));
  }
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
    throw DataError("crop scale range must satisfy 0 < min <= max <= 1");
  }
  if (!(aspect_min > 0.0 && aspect_min <= aspect_max)) throw DataError("invalid aspect ratio range");
  if (max_retries < 0) throw DataError("max_retries must be >= 0");
  if (output_height <= 0 || output_width <= 0) throw DataError("output size must be positive");
  for (double p : {flip_prob, grayscale_prob})
    if (p < 0.0 || p > 1.0) throw DataError("probabilities must lie in [0,1]");
  for (double s : {brightness, contrast, saturation})
    if (s < 0.0 || s > 1.0) throw DataError("jitter strengths must lie in [0,1]");
}

Tensor crop_resize_bilinear(const Tensor& image, const CropBox& box, int out_h, int out_w) {
  check_image(image);
  const std::int64_t h = image.dim(1), w = image.dim(2);
  Tensor out(Shape{3, out_h, out_w});
  const double sy = box.height / out_h;
  const double sx = box.width / out_w;
  std::vector<std::int64_t> x0(static_cast<std::size_t>(out_w)), x1(static_cast<std::size_t>(out_w));
  std::vector<double> fx(static_cast<std::size_t>(out_w));
  for (int x = 0; x < out_w; ++x) {
    const double src = std::clamp(box.left + (x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
    const auto i = static_cast<std::size_t>(x);
    x0[i] = static_cast<std::int64_t>(std::floor(src));
    x1[i] = std::min(x0[i] + 1, w - 1);
    fx[i] = src - static_cast<double>(x0[i]);
  }
  for (int y = 0; y < out_h; ++y) {
    const double src = std::clamp(box.top + (y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<std::int64_t>(std::floor(src));
    const std::int64_t y1 = std::min(y0 + 1, h - 1);
    const double fy = src - static_cast<double>(y0);
    for (std::int64_t c = 0; c < 3; ++c) {
      const Real* plane = image.data() + c * h * w;
      Real* dst = out.data() + (c * out_h + y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        const auto i = static_cast<std::size_t>(x);
        const double top = (1 - fx[i]) * plane[y0 * w + x0[i]] + fx[i] * plane[y0 * w + x1[i]];
        const double bottom = (1 - fx[i]) * plane[y1 * w + x0[i]] + fx[i] * plane[y1 * w + x1[i]];
        dst[x] = static_cast<Real>((1 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

ObjectMask crop_resize_nearest(const ObjectMask& mask, const CropBox& box, int out_h, int out_w) {
  ObjectMask out(out_h, out_w);
  const double sy = box.height / out_h;
  const double sx = box.width / out_w;
  for (int y = 0; y < out_h; ++y) {
    const int iy = std::clamp(static_cast<int>(std::floor(box.top + (y + 0.5) * sy)), 0, mask.height() - 1);
    for (int x = 0; x < out_w; ++x) {
      const int ix = std::clamp(static_cast<int>(std::floor(box.left + (x + 0.5) * sx)), 0, mask.width() - 1);
      out.set(y, x, mask(iy, ix) != 0);
    }
  }
  return out;
}

Tensor hflip(const Tensor& image) {
  if (image.rank() != 3) throw ShapeError("hflip expects [C,H,W], got " + shape_string(image.shape()));
  Tensor out(image.shape());
  const std::int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        out[static_cast<std::size_t>((ch * h + y) * w + x)] = image[static_cast<std::size_t>((ch * h + y) * w + (w - 1 - x))];
  return out;
}

ObjectMask hflip(const ObjectMask& mask) {
  ObjectMask out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) out.set(y, x, mask(y, mask.width() - 1 - x) != 0);
  return out;
}

void color_jitter(Tensor& image, double brightness, double contrast, double saturation) {
  check_image(image);
  const std::size_t plane = static_cast<std::size_t>(image.dim(1) * image.dim(2));
  Real* r = image.data();
  Real* g = r + plane;
  Real* b = g + plane;
  if (brightness != 1.0) {
    for (Real& v : image.values()) v = clamp01(v * brightness);
  }
  if (contrast != 1.0) {
    double mean = 0;
    for (std::size_t i = 0; i < plane; ++i) mean += luminance(r[i], g[i], b[i]);
    mean /= static_cast<double>(plane);
    for (Real& v : image.values()) v = clamp01(mean + contrast * (v - mean));
  }
  if (saturation != 1.0) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double gray = luminance(r[i], g[i], b[i]);
      r[i] = clamp01(gray + saturation * (r[i] - gray));
      g[i] = clamp01(gray + saturation * (g[i] - gray));
      b[i] = clamp01(gray + saturation * (b[i] - gray));
    }
  }
}

void to_grayscale(Tensor& image) {
  check_image(image);
  const std::size_t plane = static_cast<std::size_t>(image.dim(1) * image.dim(2));
  Real* r = image.data();
  Real* g = r + plane;
  Real* b = g + plane;
  for (std::size_t i = 0; i < plane; ++i) {
    const Real gray = clamp01(luminance(r[i], g[i], b[i]));
    r[i] = g[i] = b[i] = gray;
  }
}

View sample_view(const Tensor& image, const ObjectMask& mask, const AugmentConfig& config, Rng& rng) {
  check_image(image);
  if (mask.height() != image.dim(1) || mask.width() != image.dim(2)) {
    throw ShapeError("mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                     " does not match image " + shape_string(image.shape()));
  }
  if (mask.empty()) throw DataError("sample_view: empty object mask");
  const double h = static_cast<double>(image.dim(1));
  const double w = static_cast<double>(image.dim(2));
  const int oh = config.output_height, ow = config.output_width;

  std::optional<CropBox> chosen;
  ObjectMask view_mask;
  const double log_amin = std::log(config.aspect_min), log_amax = std::log(config.aspect_max);
  for (int attempt = 0; attempt < config.max_retries && !chosen; ++attempt) {
    const double area = h * w * rng.uniform(config.crop_scale_min, config.crop_scale_max);
    const double ratio = std::exp(rng.uniform(log_amin, log_amax));
    const double cw = std::sqrt(area * ratio);
    const double ch = std::sqrt(area / ratio);
    const double top_u = rng.uniform();
    const double left_u = rng.uniform();
    if (cw > w || ch > h) continue;
    const CropBox box{top_u * (h - ch), left_u * (w - cw), ch, cw};
    ObjectMask m = crop_resize_nearest(mask, box, oh, ow);
    if (m.fraction() > config.min_object_area) {
      chosen = box;
      view_mask = std::move(m);
    }
  }
  if (!chosen) {
    const PixelBox b = bounding_box(mask);
    chosen = CropBox{static_cast<double>(b.top), static_cast<double>(b.left), static_cast<double>(b.height()),
                     static_cast<double>(b.width())};
    view_mask = crop_resize_nearest(mask, *chosen, oh, ow);
  }
  View view{crop_resize_bilinear(image, *chosen, oh, ow), std::move(view_mask)};

  // Fixed draw order keeps streams aligned whatever the probabilities are.
  const bool flip = rng.bernoulli(config.flip_prob);
  const double bf = rng.uniform(std::max(0.0, 1.0 - config.brightness), 1.0 + config.brightness);
  const double cf = rng.uniform(std::max(0.0, 1.0 - config.contrast), 1.0 + config.contrast);
  const double sf = rng.uniform(std::max(0.0, 1.0 - config.saturation), 1.0 + config.saturation);
  const bool gray = rng.bernoulli(config.grayscale_prob);

  if (flip) {
    view.image = hflip(view.image);
    view.mask = hflip(view.mask);
  }
  color_jitter(view.image, bf, cf, sf);
  if (gray) to_grayscale(view.image);
  return view;
}

Remap remap(std::span<const ObjectMask> masks) {
  Remap r;
  r.pixels.reserve(masks.size());
  for (std::size_t n = 0; n < masks.size(); ++n) {
    r.pixels.push_back(masks[n].foreground());
    r.targets.insert(r.targets.end(), r.pixels.back().size(), static_cast<int>(n));
  }
  return r;
}

MC_NAMESPACE_END
