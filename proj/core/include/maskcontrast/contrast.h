#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "maskcontrast/augment.h"
#include "maskcontrast/autodiff.h"
#include "maskcontrast/mask.h"
#include "maskcontrast/model.h"
#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

struct LossConfig {
  double temperature = 0.5;
  double aux_weight = 1.0;
  /// Key-encoder momentum m in key = m*key + (1-m)*query.
  double momentum = 0.999;

  void validate() const;
};

/// Sum of the masked pixel embeddings, l2-normalised. Plain tensor: never
/// part of a graph.
Tensor key_prototype(const Tensor& embeddings, const ObjectMask& mask);

/// Fixed-capacity FIFO of unit prototypes used as negatives.
class MemoryBank {
 public:
  MemoryBank(std::int64_t capacity, std::int64_t dim);

  /// Appends the rows of `prototypes` [N,D] in order, evicting the oldest
  /// entries beyond capacity. Rows must have unit norm (tolerance 1e-3);
  /// all-zero rows are skipped.
  void enqueue(const Tensor& prototypes);
  /// Entries oldest first, as [size, D]. Empty tensor when the bank is empty.
  Tensor entries() const;
  const std::deque<std::vector<Real>>& rows() const { return rows_; }

  std::int64_t size() const { return static_cast<std::int64_t>(rows_.size()); }
  std::int64_t capacity() const { return capacity_; }
  std::int64_t dim() const { return dim_; }

 private:
  std::int64_t capacity_;
  std::int64_t dim_;
  std::deque<std::vector<Real>> rows_;
};

/// Logits [P, N+size(bank)]: query rows against the batch prototypes first,
/// then the bank entries oldest first. Prototypes enter as constants.
Var build_logits(Var query_pixels, const Tensor& batch_prototypes, const MemoryBank& bank);

/// Cross-entropy of logits/temperature against the image index of each pixel,
/// averaged over all pixels.
Var maskcontrast_loss(Var logits, std::span<const int> targets, double temperature);
Var total_loss(Var contrastive, Var aux, const LossConfig& config);

/// key <- m*key + (1-m)*query, elementwise. Throws on structure mismatch.
void momentum_update(ModelParams& key, const ModelParams& query, double m);

struct AlignUniform {
  double align = 0;
  double uniform = 0;
};
/// align = mean ||a_i - b_i||^2 over rows; uniform = log of the mean of
/// exp(-2 ||z_i - z_j||^2) over ordered pairs i != j of `all`.
AlignUniform alignment_uniformity(const Tensor& a, const Tensor& b, const Tensor& all);

/// One image seen twice.
struct ViewPair {
  View query;
  View key;
};

struct ObjectiveTerms {
  Var contrastive;
  Var aux;
  Var total;
  Tensor key_prototypes;  // [N,D]
  std::int64_t salient_pixels = 0;
};

/// Full objective for a batch. The key network runs in `graph` as well, with
/// its prototypes detached. Returns nullopt (and warns) when the query views
/// have no salient pixel at all.
std::optional<ObjectiveTerms> maskcontrast_objective(Graph& graph, const ModelVars& query, const ModelVars& key,
                                                     const ModelConfig& model, std::span<const ViewPair> batch,
                                                     const MemoryBank& bank, const LossConfig& config);

MC_NAMESPACE_END
