#include "maskcontrast/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "maskcontrast/dataset.h"
#include "maskcontrast/netpbm.h"
#include "maskcontrast/rng.h"

MC_NAMESPACE_BEGIN

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (classes < 2) throw DataError("synth needs at least 2 classes, got " + std::to_string(classes));
  if (classes > 254) throw DataError("synth supports at most 254 classes");
  if (images < 1) throw DataError("synth needs at least 1 image");
  if (size < 8) throw DataError("synth image size must be >= 8");
  if (!(min_area > 0.0 && min_area < 0.5)) throw DataError("synth min_area must lie in (0,0.5)");
}

namespace {

ObjectMask draw_shape(int size, int cls, Rng& rng) {
  const double s = size;
  const bool ellipse = cls % 2 == 0;
  const double ry = rng.uniform(ellipse ? 0.25 : 0.2, ellipse ? 0.42 : 0.38) * s;
  const double rx = rng.uniform(ellipse ? 0.25 : 0.2, ellipse ? 0.42 : 0.38) * s;
  const double cy = rng.uniform(ry, s - ry);
  const double cx = rng.uniform(rx, s - rx);
  ObjectMask m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dy = (y + 0.5 - cy) / ry;
      const double dx = (x + 0.5 - cx) / rx;
      const bool in = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
      m.set(y, x, in);
    }
  return m;
}

}  // namespace

SynthImage synth_image(const SynthConfig& config, int index) {
  config.validate();
  Rng rng(derive_seed(config.seed, 0x5eed, static_cast<std::uint64_t>(index)));
  SynthImage out;
  out.cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.classes)));
  const int s = config.size;

  do {
    out.mask = draw_shape(s, out.cls, rng);
  } while (out.mask.fraction() < config.min_area);

  const double theta = std::numbers::pi * out.cls / config.classes;
  const double freq = rng.uniform(0.16, 0.22);  // cycles per pixel
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amp = rng.uniform(0.3, 0.4);
  const double bright = rng.uniform(0.45, 0.55);
  double tint[3];
  for (double& t : tint) t = rng.uniform(0.9, 1.1);
  double bg[3];
  for (double& b : bg) b = rng.uniform(0.2, 0.8);
  const double noise = rng.uniform(0.05, 0.2);

  out.image = Tensor(Shape{3, s, s});
  out.labels.height = out.labels.width = s;
  out.labels.labels.assign(static_cast<std::size_t>(s * s), 0);
  const double ct = std::cos(theta), st = std::sin(theta);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const std::size_t p = static_cast<std::size_t>(y * s + x);
      const bool fg = out.mask(y, x) != 0;
      const double wave = std::sin(2.0 * std::numbers::pi * freq * (x * ct + y * st) + phase);
      for (int c = 0; c < 3; ++c) {
        const double v = fg ? (bright + amp * wave) * tint[c] : bg[c] + noise * (2.0 * rng.uniform() - 1.0);
        out.image[static_cast<std::size_t>(c * s * s) + p] = static_cast<Real>(std::clamp(v, 0.0, 1.0));
      }
      if (fg) out.labels.labels[p] = out.cls + 1;
    }
  return out;
}

void write_synthetic_dataset(const fs::path& root, const SynthConfig& config) {
  config.validate();
  for (const char* sub : {"images", "saliency", "labels"}) fs::create_directories(root / sub);
  for (int i = 0; i < config.images; ++i) {
    const SynthImage img = synth_image(config, i);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05d", i);
    write_netpbm(root / "images" / (std::string(stem) + ".ppm"), raster_from_image(img.image));
    Raster sal{config.size, config.size, 1, {}};
    Raster lab{config.size, config.size, 1, {}};
    for (std::size_t p = 0; p < img.mask.size(); ++p) {
      sal.pixels.push_back(img.mask.bits()[p] ? 255 : 0);
      lab.pixels.push_back(static_cast<std::uint8_t>(img.labels.labels[p]));
    }
    write_netpbm(root / "saliency" / (std::string(stem) + ".pgm"), sal);
    write_netpbm(root / "labels" / (std::string(stem) + ".pgm"), lab);
  }
}

MC_NAMESPACE_END
