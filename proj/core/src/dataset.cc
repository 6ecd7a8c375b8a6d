#include "maskcontrast/dataset.h"

#include <algorithm>
#include <cmath>
#include <map>

MC_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

std::map<std::string, fs::path> list_stems(const fs::path& dir, const std::string& ext) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
    out.emplace(entry.path().stem().string(), entry.path());
  }
  return out;
}

std::string join_stems(const std::vector<std::string>& stems) {
  std::string s;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (i == 8) {
      s += ", ... (" + std::to_string(stems.size()) + " total)";
      break;
    }
    s += (i ? ", " : "") + stems[i];
  }
  return s;
}

}  // namespace

bool Dataset::has_labels() const {
  return !samples.empty() && std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.labels.has_value(); });
}

int Dataset::max_label() const {
  int best = -1;
  for (const auto& s : samples) {
    if (!s.labels) continue;
    for (int v : s.labels->labels)
      if (v != LabelMap::kIgnore) best = std::max(best, v);
  }
  return best;
}

Tensor image_from_raster(const Raster& raster, const std::string& source) {
  if (raster.channels != 3) throw DataError(source + ": expected an RGB (P6) image");
  const std::int64_t h = raster.height, w = raster.width;
  Tensor t(Shape{3, h, w});
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t c = 0; c < 3; ++c)
        t[static_cast<std::size_t>((c * h + y) * w + x)] =
            static_cast<Real>(raster.pixels[static_cast<std::size_t>((y * w + x) * 3 + c)] / 255.0);
  return t;
}

Raster raster_from_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("raster_from_image expects [3,H,W]");
  Raster r;
  r.channels = 3;
  r.height = static_cast<int>(image.dim(1));
  r.width = static_cast<int>(image.dim(2));
  const std::int64_t h = r.height, w = r.width;
  r.pixels.resize(static_cast<std::size_t>(3 * h * w));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(image[static_cast<std::size_t>((c * h + y) * w + x)]), 0.0, 1.0);
        r.pixels[static_cast<std::size_t>((y * w + x) * 3 + c)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  return r;
}

ObjectMask mask_from_raster(const Raster& raster, const std::string& source) {
  if (raster.channels != 1) throw DataError(source + ": expected a grayscale (P5) mask");
  std::vector<std::uint8_t> bits(raster.pixels.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = raster.pixels[i] > 127 ? 1 : 0;
  return ObjectMask(raster.height, raster.width, std::move(bits));
}

LabelMap labels_from_raster(const Raster& raster, const std::string& source) {
  if (raster.channels != 1) throw DataError(source + ": expected a grayscale (P5) label map");
  LabelMap m;
  m.height = raster.height;
  m.width = raster.width;
  m.labels.assign(raster.pixels.begin(), raster.pixels.end());
  return m;
}

Dataset load_dataset(const fs::path& root, bool require_labels) {
  if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");
  if (!fs::is_directory(root / "images")) throw DataError("missing directory " + (root / "images").string());
  if (!fs::is_directory(root / "saliency")) throw DataError("missing directory " + (root / "saliency").string());
  const auto images = list_stems(root / "images", ".ppm");
  const auto saliency = list_stems(root / "saliency", ".pgm");
  const auto labels = list_stems(root / "labels", ".pgm");
  if (images.empty()) throw DataError("no .ppm images under " + (root / "images").string());

  std::vector<std::string> missing_sal, missing_lab;
  for (const auto& [stem, path] : images) {
    if (!saliency.count(stem)) missing_sal.push_back(stem);
    if (require_labels && !labels.count(stem)) missing_lab.push_back(stem);
  }
  if (!missing_sal.empty()) throw DataError("missing saliency masks for: " + join_stems(missing_sal));
  if (!missing_lab.empty()) throw DataError("missing label maps for: " + join_stems(missing_lab));

  Dataset ds;
  ds.root = root;
  std::vector<std::string> dropped;
  for (const auto& [stem, path] : images) {
    Sample s;
    s.id = stem;
    s.image = image_from_raster(read_netpbm(path), path.string());
    const fs::path sal_path = saliency.at(stem);
    s.saliency = mask_from_raster(read_netpbm(sal_path), sal_path.string());
    if (s.saliency.height() != s.image.dim(1) || s.saliency.width() != s.image.dim(2)) {
      throw DataError(sal_path.string() + ": size does not match image " + path.string());
    }
    if (auto it = labels.find(stem); it != labels.end()) {
      s.labels = labels_from_raster(read_netpbm(it->second), it->second.string());
      if (s.labels->height != s.saliency.height() || s.labels->width != s.saliency.width()) {
        throw DataError(it->second.string() + ": size does not match image " + path.string());
      }
    }
    if (s.saliency.empty()) {
      dropped.push_back(stem);
      continue;
    }
    ds.samples.push_back(std::move(s));
  }
  if (!dropped.empty()) log_warning("excluded images with all-background saliency: " + join_stems(dropped));
  if (ds.empty()) throw DataError("dataset " + root.string() + " has no usable images");
  return ds;
}

MC_NAMESPACE_END
