#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "maskcontrast/autodiff.h"
#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

struct ModelConfig {
  int embed_dim = 32;
  std::vector<int> channels{8, 16, 32};
  int input_height = 32;
  int input_width = 32;

  /// Product of the encoder strides.
  int downsample_factor() const { return 1 << channels.size(); }
  void validate() const;
};

struct ConvLayer {
  Tensor weight;  // [out, in, kH, kW]
  Tensor bias;    // [out]
};

using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;
using ConstNamedTensors = std::vector<std::pair<std::string, const Tensor*>>;

/// Encoder (stride-2 conv + relu stages), bilinear upsampling back to input
/// resolution, one linear 3x3 conv, then two 1x1 heads on the same features:
/// D-dimensional pixel embeddings and a saliency logit.
struct ModelParams {
  ModelConfig config;
  std::vector<ConvLayer> encoder;
  ConvLayer decoder;
  ConvLayer embed_head;
  ConvLayer saliency_head;

  /// Every tensor with a stable name, in a fixed order.
  NamedTensors tensors();
  ConstNamedTensors tensors() const;
  /// Same structure, all zeros.
  ModelParams zeros_like() const;
  std::size_t parameter_count() const;
};

/// Weights uniform in (-s, s), s = sqrt(1/fan_in); biases zero.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

struct ConvVars {
  Var weight;
  Var bias;
};

/// Parameters bound into a graph.
struct ModelVars {
  std::vector<ConvVars> encoder;
  ConvVars decoder;
  ConvVars embed_head;
  ConvVars saliency_head;
};

/// Binds `params` as graph leaves; trainable leaves receive gradients.
ModelVars bind(Graph& graph, const ModelParams& params, bool trainable);
/// Collects leaf gradients into a params-shaped container (zeros where no
/// gradient arrived).
ModelParams collect_gradients(const ModelVars& vars, const ModelParams& like);

struct ForwardVars {
  Var features;         // [F,H,W], input to both heads
  Var embeddings;       // [D,H,W], unit norm per pixel
  Var saliency_logits;  // [H,W]
};

/// Shared trunk: encoder, upsampling and the decoder conv.
Var forward_features(const ModelVars& vars, Var image, const ModelConfig& config);
ForwardVars forward(const ModelVars& vars, Var image, const ModelConfig& config);

/// Output of a no-grad forward pass.
struct PixelEmbeddingMap {
  Tensor embeddings;       // [D,H,W]
  Tensor saliency_logits;  // [H,W]
};
PixelEmbeddingMap predict(const ModelParams& params, const Tensor& image);

/// Checks image shape [3,H,W] against the downsampling factor.
void check_input(const Tensor& image, const ModelConfig& config);

// MCKP checkpoint: "MCKP", u32 version = 1, then records
// {u32 name_len, utf-8 name, MCT1 tensor} until end of file.
void write_checkpoint(const std::filesystem::path& path, const ConstNamedTensors& records);
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);
/// Rebuilds a model from checkpoint records; ignores unrelated records.
ModelParams model_from_records(const std::vector<std::pair<std::string, Tensor>>& records);

MC_NAMESPACE_END
