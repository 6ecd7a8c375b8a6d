#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maskcontrast/dataset.h"
#include "maskcontrast/model.h"
#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

enum class MatchMode {
  kHungarian,  // one-to-one, maximal total intersection
  kMajority,   // many-to-one, each prediction id to its majority class
  kIdentity,   // prediction id == class id
};

struct MatchOptions {
  MatchMode mode = MatchMode::kHungarian;
  int ignore_label = 255;
  /// (prediction id, class) pairs fixed before matching, e.g. background.
  std::vector<std::pair<int, int>> pinned;
};

struct EvalReport {
  /// Class assigned to each prediction id; -1 if unmatched.
  std::vector<int> mapping;
  /// IoU per class id; NaN for classes absent from the ground truth.
  std::vector<double> per_class_iou;
  double miou = 0;
  double pixel_accuracy = 0;
  int runs = 1;
};

/// Confusion counts [num_pred][num_classes] over non-ignored pixels.
std::vector<std::vector<std::int64_t>> confusion(std::span<const int> pred, std::span<const int> gt, int num_pred,
                                                 int num_classes, int ignore_label);

/// Matches prediction ids to classes, relabels and scores. IoU = TP/(TP+FP+FN)
/// averaged over the classes that occur in `gt`. Throws DataError when no
/// ground-truth pixel is left after removing ignored ones.
EvalReport cluster_miou(std::span<const int> pred, std::span<const int> gt, int num_pred, int num_classes,
                        const MatchOptions& options = {});

/// Mean of miou, pixel accuracy and per-class IoU over runs; mapping of the
/// first run.
EvalReport average_reports(const std::vector<EvalReport>& reports);

/// {"miou", "per_class_iou", "mapping", "runs", "pixel_accuracy"}; absent
/// classes are null.
std::string report_json(const EvalReport& report);

/// Foreground where sigmoid(logit) > 0.5.
ObjectMask saliency_mask(const Tensor& saliency_logits);
/// Object pixels (sigmoid > 0.5) take `object_label`, the rest `background_label`.
std::vector<int> assign_object_labels(const Tensor& saliency_logits, int object_label, int background_label);

// ---------------------------------------------------------------------------
// Clustering protocol over a dataset.

enum class MaskSource { kPredicted, kFile };

struct ClusterProtocol {
  int clusters = 2;
  int runs = 5;
  int restarts = 10;  // k-means restarts per run, best objective kept
  int max_iter = 100;
  MatchMode mode = MatchMode::kHungarian;
  MaskSource mask_source = MaskSource::kPredicted;
  /// Score only pixels whose ground truth is an object class (label != 0).
  bool foreground_only = false;
  std::uint64_t seed = 0;
};

/// Per-image network outputs reused across runs.
struct ImageEmbedding {
  Tensor embeddings;  // [D,H,W]
  ObjectMask object;  // mask the descriptor is pooled over
};
std::vector<ImageEmbedding> embed_dataset(const ModelParams& params, const Dataset& data, MaskSource source);

/// l2-normalised masked mean embedding per image with a non-empty object
/// mask; rows follow `images`, skipping empty ones (listed in `skipped`).
Tensor object_descriptors(const std::vector<ImageEmbedding>& images, std::vector<std::size_t>* skipped = nullptr);

/// K-Means over object descriptors, object pixels labelled by cluster, the
/// rest by a background id pinned to class 0, matched and averaged over runs.
/// Label maps use 0 for background and 1..C for object classes.
EvalReport evaluate_clustering(const std::vector<ImageEmbedding>& images, const Dataset& data,
                               const ClusterProtocol& protocol);

// ---------------------------------------------------------------------------
// Linear probe on frozen embeddings.

struct ProbeConfig {
  int epochs = 60;
  int batch_size = 16;
  double lr = 0.1;
  int lr_drop_epoch = 40;
  double lr_after_drop = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  ConvLayer probe;  // [C,D,1,1]
  EvalReport report;
};

/// Trains a 1x1 conv classifier on `embeddings` (each [D,H,W], constants)
/// against `labels`, then scores its argmax with plain (identity) mIoU on the
/// same images.
ProbeResult linear_probe(const std::vector<Tensor>& embeddings, const std::vector<LabelMap>& labels, int num_classes,
                         const ProbeConfig& config);
/// Argmax class per pixel of probe(embeddings).
std::vector<int> probe_predict(const ConvLayer& probe, const Tensor& embeddings);

MC_NAMESPACE_END
