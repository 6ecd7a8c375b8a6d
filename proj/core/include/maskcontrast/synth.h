#pragma once

#include <cstdint>
#include <filesystem>

#include "maskcontrast/mask.h"
#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

/// Synthetic one-object-per-image dataset. Each class has a fixed stripe
/// orientation (pi*c/C) and shape (even classes ellipses, odd rectangles);
/// frequency, phase, contrast, brightness and tint vary per instance.
struct SynthConfig {
  int images = 200;
  int classes = 2;
  int size = 32;
  std::uint64_t seed = 0;
  /// Lower bound on the object's share of the image.
  double min_area = 0.15;

  void validate() const;
};

struct SynthImage {
  int cls = 0;
  Tensor image;  // [3,S,S]
  ObjectMask mask;
  LabelMap labels;  // 0 background, c+1 for class c
};

/// Image `index` of the dataset; depends only on (config, index).
SynthImage synth_image(const SynthConfig& config, int index);

/// Writes images/, saliency/ and labels/ under `root`. Stems are zero-padded
/// indices.
void write_synthetic_dataset(const std::filesystem::path& root, const SynthConfig& config);

MC_NAMESPACE_END
