#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "maskcontrast/augment.h"
#include "maskcontrast/contrast.h"
#include "maskcontrast/dataset.h"
#include "maskcontrast/model.h"

MC_NAMESPACE_BEGIN

struct TrainerConfig {
  int epochs = 60;
  int batch_size = 64;
  double base_lr = 0.004;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  double poly_power = 0.9;
  std::uint64_t seed = 0;
  /// Memory bank capacity K.
  int bank_size = 128;

  void validate() const;
};

/// base_lr * (1 - iter/max_iter)^power.
double poly_lr(std::int64_t iter, std::int64_t max_iter, double base_lr, double power);

/// v <- momentum*v + g + weight_decay*w;  w <- w - lr*v. The three lists must
/// line up name by name. Throws NumericError naming the first parameter whose
/// gradient is not finite, before anything is modified.
void sgd_step(const NamedTensors& params, const ConstNamedTensors& grads, const NamedTensors& velocity, double lr,
              double momentum, double weight_decay);
void sgd_step(ModelParams& params, const ModelParams& grads, ModelParams& velocity, double lr, double momentum,
              double weight_decay);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double contrastive_loss = 0;
  double aux_loss = 0;
  double total_loss = 0;
  double lr = 0;  // rate at the first step of the epoch
};

struct TrainResult {
  ModelParams query;
  ModelParams key;
  std::vector<EpochMetrics> metrics;
  int skipped_steps = 0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Self-supervised training. Per step: two views per image, query and key
/// forward passes, losses, backward, SGD on the query network, momentum update
/// of the key network, then the key prototypes enter the bank. The views of
/// an image are seeded by (seed, epoch, image index).
TrainResult train(const Dataset& data, const ModelParams& init, const AugmentConfig& augment,
                  const LossConfig& loss, const TrainerConfig& config, const EpochCallback& on_epoch = {});

/// `epoch,contrastive_loss,aux_loss,total_loss,lr`, one row per epoch.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics);
std::string metrics_csv(const std::vector<EpochMetrics>& metrics);

// ---------------------------------------------------------------------------
// Supervised fine-tuning: the embedding head is replaced by a class head.

struct Classifier {
  ModelParams body;  // only the encoder and decoder are used
  ConvLayer head;    // [C, F, 1, 1]
  int num_classes() const { return static_cast<int>(head.weight.dim(0)); }
};

struct FinetuneConfig {
  TrainerConfig trainer;
  double label_fraction = 1.0;
  double head_lr_multiplier = 25.0;
  /// Defaults to 1 + the largest label id in the data.
  int num_classes = 0;

  void validate() const;
};

struct FinetuneMetrics {
  int epoch = 0;
  double loss = 0;
  double pixel_accuracy = 0;
  double lr = 0;
};

struct FinetuneResult {
  Classifier model;
  std::vector<std::size_t> labeled;  // indices into the dataset
  std::vector<FinetuneMetrics> metrics;
};

/// Images used for fine-tuning: round(fraction*N) (at least one) indices,
/// chosen by seed, returned sorted.
std::vector<std::size_t> labeled_subset(std::size_t n, double fraction, std::uint64_t seed);

Classifier init_classifier(const ModelParams& body, int num_classes, std::uint64_t seed);
/// Class logits [C,H,W].
Tensor classify(const Classifier& model, const Tensor& image);
FinetuneResult supervised_finetune(const Dataset& data, const ModelParams& pretrained, const FinetuneConfig& config);

void save_classifier(const std::filesystem::path& path, const Classifier& model);
Classifier load_classifier(const std::filesystem::path& path);

MC_NAMESPACE_END
