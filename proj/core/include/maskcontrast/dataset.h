#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskcontrast/mask.h"
#include "maskcontrast/netpbm.h"
#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

struct Sample {
  std::string id;  // file stem
  Tensor image;    // [3,H,W] in [0,1]
  ObjectMask saliency;
  std::optional<LabelMap> labels;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool has_labels() const;
  /// Largest class id present in the label maps, ignoring 255; -1 if none.
  int max_label() const;
};

/// Reads `root/images/*.ppm`, `root/saliency/*.pgm` (values > 127 are salient)
/// and, if present, `root/labels/*.pgm`, paired by stem in sorted order.
/// Images whose saliency mask is all background are dropped with a warning.
Dataset load_dataset(const std::filesystem::path& root, bool require_labels);

Tensor image_from_raster(const Raster& raster, const std::string& source);
Raster raster_from_image(const Tensor& image);
ObjectMask mask_from_raster(const Raster& raster, const std::string& source);
LabelMap labels_from_raster(const Raster& raster, const std::string& source);

MC_NAMESPACE_END
