#include "maskcontrast/contrast.h"

#include <cmath>
#include <string>

MC_NAMESPACE_BEGIN

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw DataError("temperature must be > 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw DataError("momentum must lie in [0,1]");
  if (!(aux_weight >= 0.0)) throw DataError("aux_weight must be >= 0");
}

Tensor key_prototype(const Tensor& embeddings, const ObjectMask& mask) {
  if (embeddings.rank() != 3 || embeddings.dim(1) != mask.height() || embeddings.dim(2) != mask.width()) {
    throw ShapeError("key_prototype: embeddings " + shape_string(embeddings.shape()) + " vs mask " +
                     std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
  }
  if (mask.empty()) throw DataError("key_prototype: empty object mask");
  const std::int64_t d = embeddings.dim(0);
  const std::size_t plane = mask.size();
  std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
  const auto bits = mask.bits();
  for (std::int64_t c = 0; c < d; ++c) {
    const Real* p = embeddings.data() + static_cast<std::size_t>(c) * plane;
    double s = 0;
    for (std::size_t i = 0; i < plane; ++i)
      if (bits[i]) s += p[i];
    acc[static_cast<std::size_t>(c)] = s;
  }
  double norm = 0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  if (norm <= 1e-12) throw NumericError("key_prototype: masked embeddings sum to zero");
  Tensor out(Shape{d});
  for (std::int64_t c = 0; c < d; ++c) out[static_cast<std::size_t>(c)] = static_cast<Real>(acc[static_cast<std::size_t>(c)] / norm);
  return out;
}

MemoryBank::MemoryBank(std::int64_t capacity, std::int64_t dim) : capacity_(capacity), dim_(dim) {
  if (capacity < 0) throw DataError("memory bank capacity must be >= 0");
  if (dim <= 0) throw DataError("memory bank dimension must be positive");
}

void MemoryBank::enqueue(const Tensor& prototypes) {
  if (prototypes.rank() != 2 || prototypes.dim(1) != dim_) {
    throw ShapeError("enqueue expects [N," + std::to_string(dim_) + "], got " + shape_string(prototypes.shape()));
  }
  for (std::int64_t r = 0; r < prototypes.dim(0); ++r) {
    const Real* row = prototypes.data() + r * dim_;
    double n2 = 0;
    for (std::int64_t c = 0; c < dim_; ++c) n2 += static_cast<double>(row[c]) * row[c];
    if (n2 == 0) continue;  // degenerate prototype from an all-zero embedding
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-3) {
      throw NumericError("enqueue: prototype row " + std::to_string(r) + " is not unit norm");
    }
    if (capacity_ == 0) continue;
    if (size() == capacity_) rows_.pop_front();
    rows_.emplace_back(row, row + dim_);
  }
}

Tensor MemoryBank::entries() const {
  if (rows_.empty()) return Tensor();
  Tensor out(Shape{size(), dim_});
  Real* dst = out.data();
  for (const auto& row : rows_) dst = std::copy(row.begin(), row.end(), dst);
  return out;
}

Var build_logits(Var query_pixels, const Tensor& batch_prototypes, const MemoryBank& bank) {
  const Tensor& q = query_pixels.value();
  if (q.rank() != 2 || batch_prototypes.rank() != 2 || q.dim(1) != batch_prototypes.dim(1) ||
      q.dim(1) != bank.dim()) {
    throw ShapeError("build_logits: query " + shape_string(q.shape()) + ", prototypes " +
                     shape_string(batch_prototypes.shape()) + ", bank dim " + std::to_string(bank.dim()));
  }
  const std::int64_t d = q.dim(1);
  const std::int64_t n = batch_prototypes.dim(0);
  const std::int64_t cols = n + bank.size();
  // Columns are prototypes, so store [D, N+K].
  Tensor keys(Shape{d, cols});
  for (std::int64_t j = 0; j < n; ++j)
    for (std::int64_t c = 0; c < d; ++c) keys[static_cast<std::size_t>(c * cols + j)] = batch_prototypes[static_cast<std::size_t>(j * d + c)];
  std::int64_t j = n;
  for (const auto& row : bank.rows()) {
    for (std::int64_t c = 0; c < d; ++c) keys[static_cast<std::size_t>(c * cols + j)] = row[static_cast<std::size_t>(c)];
    ++j;
  }
  return matmul(query_pixels, query_pixels.graph().constant(std::move(keys)));
}

Var maskcontrast_loss(Var logits, std::span<const int> targets, double temperature) {
  if (!(temperature > 0.0)) throw DataError("temperature must be > 0");
  return softmax_cross_entropy(scale(logits, 1.0 / temperature), targets);
}

Var total_loss(Var contrastive, Var aux, const LossConfig& config) {
  return add(contrastive, scale(aux, config.aux_weight));
}

void momentum_update(ModelParams& key, const ModelParams& query, double m) {
  if (m < 0.0 || m > 1.0) throw DataError("momentum must lie in [0,1]");
  auto k = key.tensors();
  const auto q = query.tensors();
  if (k.size() != q.size()) throw ShapeError("momentum_update: parameter structures differ");
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i].first != q[i].first || k[i].second->shape() != q[i].second->shape()) {
      throw ShapeError("momentum_update: parameter " + k[i].first + " does not match " + q[i].first);
    }
  }
  if (m == 1.0) return;
  for (std::size_t i = 0; i < k.size(); ++i) {
    Tensor& kt = *k[i].second;
    const Tensor& qt = *q[i].second;
    if (m == 0.0) {
      kt = qt;
      continue;
    }
    for (std::size_t e = 0; e < kt.size(); ++e) kt[e] = static_cast<Real>(m * kt[e] + (1.0 - m) * qt[e]);
  }
}

AlignUniform alignment_uniformity(const Tensor& a, const Tensor& b, const Tensor& all) {
  if (a.shape() != b.shape() || a.rank() != 2) {
    throw ShapeError("alignment: positive pairs must be two [M,D] tensors");
  }
  if (all.rank() != 2 || all.dim(0) < 2) throw DataError("uniformity needs at least 2 vectors");
  AlignUniform out;
  const std::int64_t m = a.dim(0);
  if (m > 0) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = static_cast<double>(a[i]) - b[i];
      s += diff * diff;
    }
    out.align = s / static_cast<double>(m);
  }
  const std::int64_t n = all.dim(0);
  const std::int64_t dd = all.dim(1);
  // log-mean-exp over ordered pairs; the largest exponent is at most 0.
  std::vector<double> expo;
  expo.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double s = 0;
      for (std::int64_t c = 0; c < dd; ++c) {
        const double diff = static_cast<double>(all[static_cast<std::size_t>(i * dd + c)]) - all[static_cast<std::size_t>(j * dd + c)];
        s += diff * diff;
      }
      expo.push_back(-2.0 * s);
    }
  double mx = expo.front();
  for (double e : expo) mx = std::max(mx, e);
  double z = 0;
  for (double e : expo) z += std::exp(e - mx);
  out.uniform = mx + std::log(z / static_cast<double>(expo.size()));
  return out;
}

std::optional<ObjectiveTerms> maskcontrast_objective(Graph& graph, const ModelVars& query, const ModelVars& key,
                                                     const ModelConfig& model, std::span<const ViewPair> batch,
                                                     const MemoryBank& bank, const LossConfig& config) {
  config.validate();
  if (batch.empty()) throw DataError("maskcontrast_objective: empty batch");
  std::vector<ObjectMask> query_masks;
  query_masks.reserve(batch.size());
  for (const auto& pair : batch) query_masks.push_back(pair.query.mask);
  const Remap rm = remap(query_masks);
  if (rm.salient_pixels() == 0) {
    log_warning("batch has no salient pixel after augmentation; step skipped");
    return std::nullopt;
  }

  // Key side: sum-pool then normalise, no gradient.
  std::vector<Var> pooled;
  pooled.reserve(batch.size());
  for (const auto& pair : batch) {
    const ForwardVars k = forward(key, graph.constant(pair.key.image), model);
    pooled.push_back(masked_sum_pool(k.embeddings, pair.key.mask.bits()));
  }
  const Var protos = detach(l2_normalize(concat_rows(pooled), 1));

  std::vector<Var> pixels;
  Var aux_sum;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const ForwardVars q = forward(query, graph.constant(batch[n].query.image), model);
    if (!rm.pixels[n].empty()) pixels.push_back(select_pixels(q.embeddings, rm.pixels[n]));
    const Var bce = binary_cross_entropy(q.saliency_logits, batch[n].query.mask.bits());
    aux_sum = aux_sum.valid() ? add(aux_sum, bce) : bce;
  }

  ObjectiveTerms terms;
  terms.key_prototypes = protos.value();
  terms.salient_pixels = rm.salient_pixels();
  const Var logits = build_logits(concat_rows(pixels), terms.key_prototypes, bank);
  terms.contrastive = maskcontrast_loss(logits, rm.targets, config.temperature);
  terms.aux = scale(aux_sum, 1.0 / static_cast<double>(batch.size()));
  terms.total = total_loss(terms.contrastive, terms.aux, config);
  return terms;
}

MC_NAMESPACE_END
