#include "maskcontrast/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "maskcontrast/autodiff.h"
#include "maskcontrast/hungarian.h"
#include "maskcontrast/kernels.h"
#include "maskcontrast/kmeans.h"
#include "maskcontrast/rng.h"
#include "maskcontrast/trainer.h"

MC_NAMESPACE_BEGIN

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> match(const std::vector<std::vector<std::int64_t>>& conf, int num_pred, int num_classes,
                       const MatchOptions& options) {
  std::vector<int> mapping(static_cast<std::size_t>(num_pred), -1);
  std::vector<char> pred_fixed(static_cast<std::size_t>(num_pred), 0);
  std::vector<char> class_fixed(static_cast<std::size_t>(num_classes), 0);
  for (const auto& [p, c] : options.pinned) {
    if (p < 0 || p >= num_pred || c < 0 || c >= num_classes) throw DataError("pinned pair out of range");
    mapping[static_cast<std::size_t>(p)] = c;
    pred_fixed[static_cast<std::size_t>(p)] = 1;
    class_fixed[static_cast<std::size_t>(c)] = 1;
  }

  switch (options.mode) {
    case MatchMode::kIdentity:
      for (int p = 0; p < num_pred; ++p)
        if (!pred_fixed[static_cast<std::size_t>(p)]) mapping[static_cast<std::size_t>(p)] = p < num_classes ? p : -1;
      break;
    case MatchMode::kMajority:
      for (int p = 0; p < num_pred; ++p) {
        if (pred_fixed[static_cast<std::size_t>(p)]) continue;
        const auto& row = conf[static_cast<std::size_t>(p)];
        const auto best = std::max_element(row.begin(), row.end());
        if (*best > 0) mapping[static_cast<std::size_t>(p)] = static_cast<int>(best - row.begin());
      }
      break;
    case MatchMode::kHungarian: {
      std::vector<int> preds, classes;
      for (int p = 0; p < num_pred; ++p)
        if (!pred_fixed[static_cast<std::size_t>(p)]) preds.push_back(p);
      for (int c = 0; c < num_classes; ++c)
        if (!class_fixed[static_cast<std::size_t>(c)]) classes.push_back(c);
      const std::size_t n = std::max(preds.size(), classes.size());
      std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < classes.size(); ++j)
          cost[i][j] = -static_cast<double>(conf[static_cast<std::size_t>(preds[i])][static_cast<std::size_t>(classes[j])]);
      const Assignment a = hungarian(cost);
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto j = static_cast<std::size_t>(a.row_to_col[i]);
        if (j < classes.size()) mapping[static_cast<std::size_t>(preds[i])] = classes[j];
      }
      break;
    }
  }
  return mapping;
}

}  // namespace

std::vector<std::vector<std::int64_t>> confusion(std::span<const int> pred, std::span<const int> gt, int num_pred,
                                                 int num_classes, int ignore_label) {
  if (pred.size() != gt.size()) {
    throw ShapeError("prediction has " + std::to_string(pred.size()) + " pixels, ground truth " +
                     std::to_string(gt.size()));
  }
  std::vector<std::vector<std::int64_t>> conf(static_cast<std::size_t>(num_pred),
                                              std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == ignore_label) continue;
    if (gt[i] < 0 || gt[i] >= num_classes) throw DataError("ground-truth label " + std::to_string(gt[i]) + " out of range");
    if (pred[i] < 0 || pred[i] >= num_pred) throw DataError("prediction id " + std::to_string(pred[i]) + " out of range");
    ++conf[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(gt[i])];
  }
  return conf;
}

EvalReport cluster_miou(std::span<const int> pred, std::span<const int> gt, int num_pred, int num_classes,
                        const MatchOptions& options) {
  if (num_pred < 1 || num_classes < 1) throw DataError("cluster_miou: need at least one prediction id and class");
  const auto conf = confusion(pred, gt, num_pred, num_classes, options.ignore_label);
  EvalReport r;
  r.mapping = match(conf, num_pred, num_classes, options);

  const auto nc = static_cast<std::size_t>(num_classes);
  std::vector<std::int64_t> tp(nc, 0), pred_total(nc, 0), gt_total(nc, 0);
  std::int64_t counted = 0, correct = 0;
  for (std::size_t p = 0; p < conf.size(); ++p) {
    const int mapped = r.mapping[p];
    for (std::size_t c = 0; c < nc; ++c) {
      const std::int64_t v = conf[p][c];
      gt_total[c] += v;
      counted += v;
      if (mapped < 0) continue;
      pred_total[static_cast<std::size_t>(mapped)] += v;
      if (static_cast<std::size_t>(mapped) == c) {
        tp[c] += v;
        correct += v;
      }
    }
  }
  if (counted == 0) throw DataError("cluster_miou: no ground-truth pixels to score");

  r.per_class_iou.assign(nc, kNaN);
  double sum = 0;
  int present = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    if (gt_total[c] == 0) continue;
    const std::int64_t uni = gt_total[c] + pred_total[c] - tp[c];
    r.per_class_iou[c] = static_cast<double>(tp[c]) / static_cast<double>(uni);
    sum += r.per_class_iou[c];
    ++present;
  }
  r.miou = sum / present;
  r.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(counted);
  return r;
}

EvalReport average_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw DataError("average_reports: no reports");
  EvalReport out;
  out.mapping = reports.front().mapping;
  out.runs = 0;
  std::size_t nc = 0;
  for (const auto& r : reports) nc = std::max(nc, r.per_class_iou.size());
  std::vector<double> sums(nc, 0.0);
  std::vector<int> counts(nc, 0);
  for (const auto& r : reports) {
    out.miou += r.miou;
    out.pixel_accuracy += r.pixel_accuracy;
    out.runs += r.runs;
    for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
      if (std::isnan(r.per_class_iou[c])) continue;
      sums[c] += r.per_class_iou[c];
      ++counts[c];
    }
  }
  const auto n = static_cast<double>(reports.size());
  out.miou /= n;
  out.pixel_accuracy /= n;
  out.per_class_iou.assign(nc, kNaN);
  for (std::size_t c = 0; c < nc; ++c)
    if (counts[c]) out.per_class_iou[c] = sums[c] / counts[c];
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["miou"] = report.miou;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (double v : report.per_class_iou) per.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
  j["per_class_iou"] = per;
  j["mapping"] = report.mapping;
  j["runs"] = report.runs;
  j["pixel_accuracy"] = report.pixel_accuracy;
  return j.dump(2) + "\n";
}

ObjectMask saliency_mask(const Tensor& saliency_logits) {
  if (saliency_logits.rank() != 2) throw ShapeError("saliency logits must be [H,W]");
  ObjectMask m(static_cast<int>(saliency_logits.dim(0)), static_cast<int>(saliency_logits.dim(1)));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      m.set(y, x, saliency_logits[static_cast<std::size_t>(y * m.width() + x)] > Real(0));
  return m;
}

std::vector<int> assign_object_labels(const Tensor& saliency_logits, int object_label, int background_label) {
  const ObjectMask m = saliency_mask(saliency_logits);
  std::vector<int> out(m.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.bits()[i] ? object_label : background_label;
  return out;
}

std::vector<ImageEmbedding> embed_dataset(const ModelParams& params, const Dataset& data, MaskSource source) {
  std::vector<ImageEmbedding> out;
  out.reserve(data.size());
  for (const auto& s : data.samples) {
    PixelEmbeddingMap m = predict(params, s.image);
    ObjectMask object = source == MaskSource::kFile ? s.saliency : saliency_mask(m.saliency_logits);
    out.push_back(ImageEmbedding{std::move(m.embeddings), std::move(object)});
  }
  return out;
}

Tensor object_descriptors(const std::vector<ImageEmbedding>& images, std::vector<std::size_t>* skipped) {
  std::vector<Tensor> rows;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].object.empty()) {
      if (skipped) skipped->push_back(i);
      continue;
    }
    Graph g;
    const Var pooled = masked_mean_pool(g.constant(images[i].embeddings), images[i].object.bits());
    rows.push_back(l2_normalize(pooled, 0).value());
  }
  if (rows.empty()) return Tensor();
  const std::int64_t d = rows.front().dim(0);
  Tensor out(Shape{static_cast<std::int64_t>(rows.size()), d});
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].data(), rows[r].data() + d, out.data() + static_cast<std::int64_t>(r) * d);
  return out;
}

EvalReport evaluate_clustering(const std::vector<ImageEmbedding>& images, const Dataset& data,
                               const ClusterProtocol& protocol) {
  if (images.size() != data.size()) throw DataError("evaluate_clustering: embeddings do not match the dataset");
  if (!data.has_labels()) throw DataError("evaluation needs label maps for every image");
  if (protocol.runs < 1) throw DataError("runs must be >= 1");
  const int k = protocol.clusters;
  const int num_classes = data.max_label() + 1;
  if (num_classes < 2) throw DataError("evaluation needs at least one object class in the labels");
  const int object_classes = num_classes - 1;
  if (protocol.mode == MatchMode::kHungarian && k < object_classes) {
    throw DataError("--clusters " + std::to_string(k) + " is below the " + std::to_string(object_classes) +
                    " object classes; Hungarian matching needs clusters >= classes");
  }

  std::vector<std::size_t> skipped;
  const Tensor desc = object_descriptors(images, &skipped);
  if (desc.empty() || desc.dim(0) < k) {
    throw DataError("only " + std::to_string(desc.empty() ? 0 : desc.dim(0)) + " images have an object mask; need >= " +
                    std::to_string(k) + " for K-Means");
  }
  if (!skipped.empty()) log_warning(std::to_string(skipped.size()) + " images have an empty object mask");

  std::vector<int> gt;
  for (const auto& s : data.samples)
    for (int v : s.labels->labels) gt.push_back(protocol.foreground_only && v == 0 ? LabelMap::kIgnore : v);

  MatchOptions match_opts;
  match_opts.mode = protocol.mode;
  match_opts.pinned = {{k, 0}};

  std::vector<EvalReport> reports;
  for (int run = 0; run < protocol.runs; ++run) {
    const KMeansResult km = kmeans_best_of(desc, k, protocol.max_iter,
                                           derive_seed(protocol.seed, static_cast<std::uint64_t>(run)), protocol.restarts);
    std::vector<int> pred;
    pred.reserve(gt.size());
    std::size_t row = 0;
    for (const auto& img : images) {
      const bool has = !img.object.empty();
      const int label = has ? km.assignments[row] : k;
      if (has) ++row;
      for (auto b : img.object.bits()) pred.push_back(b ? label : k);
    }
    reports.push_back(cluster_miou(pred, gt, k + 1, num_classes, match_opts));
  }
  return average_reports(reports);
}

std::vector<int> probe_predict(const ConvLayer& probe, const Tensor& embeddings) {
  const Tensor logits = kernels::conv2d(embeddings, probe.weight, probe.bias, 1, 0);
  const std::int64_t c = logits.dim(0), pixels = logits.dim(1) * logits.dim(2);
  std::vector<int> out(static_cast<std::size_t>(pixels));
  for (std::int64_t p = 0; p < pixels; ++p) {
    int best = 0;
    for (std::int64_t k = 1; k < c; ++k)
      if (logits[static_cast<std::size_t>(k * pixels + p)] > logits[static_cast<std::size_t>(best * pixels + p)]) best = static_cast<int>(k);
    out[static_cast<std::size_t>(p)] = best;
  }
  return out;
}

ProbeResult linear_probe(const std::vector<Tensor>& embeddings, const std::vector<LabelMap>& labels, int num_classes,
                         const ProbeConfig& config) {
  if (embeddings.empty() || embeddings.size() != labels.size()) {
    throw DataError("linear_probe: need one label map per embedding map");
  }
  if (num_classes < 2) throw DataError("linear_probe: need at least 2 classes");
  if (config.epochs < 0 || config.batch_size < 1) throw DataError("linear_probe: invalid epochs or batch size");
  const std::int64_t d = embeddings.front().dim(0);

  ProbeResult res;
  res.probe = ConvLayer{Tensor(Shape{num_classes, d, 1, 1}), Tensor(Shape{num_classes})};
  Rng init_rng(derive_seed(config.seed, 0x9b0bu));
  const double bound = std::sqrt(1.0 / static_cast<double>(d));
  for (Real& v : res.probe.weight.values()) v = static_cast<Real>(init_rng.uniform(-bound, bound));
  ConvLayer velocity{Tensor(res.probe.weight.shape()), Tensor(res.probe.bias.shape())};

  std::vector<std::int64_t> all(static_cast<std::size_t>(embeddings.front().dim(1) * embeddings.front().dim(2)));
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto n = static_cast<std::int64_t>(order.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = epoch < config.lr_drop_epoch ? config.lr : config.lr_after_drop;
    Rng order_rng(derive_seed(config.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), order_rng);
    for (std::int64_t start = 0; start < n; start += config.batch_size) {
      const std::int64_t stop = std::min(n, start + config.batch_size);
      Graph g;
      const Var w = g.parameter(res.probe.weight);
      const Var b = g.parameter(res.probe.bias);
      Var loss_sum;
      for (std::int64_t i = start; i < stop; ++i) {
        const std::size_t idx = order[static_cast<std::size_t>(i)];
        const Tensor& e = embeddings[idx];
        if (static_cast<std::size_t>(e.dim(1) * e.dim(2)) != labels[idx].labels.size()) {
          throw ShapeError("linear_probe: label map size differs from embedding map");
        }
        const Var logits = conv2d(g.constant(e), w, b, 1, 0);
        const std::vector<int> targets(labels[idx].labels.begin(), labels[idx].labels.end());
        const Var l = softmax_cross_entropy(select_pixels(logits, all), targets, LabelMap::kIgnore);
        loss_sum = loss_sum.valid() ? add(loss_sum, l) : l;
      }
      g.backward(scale(loss_sum, 1.0 / static_cast<double>(stop - start)));
      const Tensor gw = w.grad().empty() ? Tensor(res.probe.weight.shape()) : w.grad();
      const Tensor gb = b.grad().empty() ? Tensor(res.probe.bias.shape()) : b.grad();
      sgd_step({{"probe.weight", &res.probe.weight}, {"probe.bias", &res.probe.bias}},
               {{"probe.weight", &gw}, {"probe.bias", &gb}},
               {{"probe.weight", &velocity.weight}, {"probe.bias", &velocity.bias}}, lr, config.momentum,
               config.weight_decay);
    }
  }

  std::vector<int> pred, gt;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto p = probe_predict(res.probe, embeddings[i]);
    pred.insert(pred.end(), p.begin(), p.end());
    gt.insert(gt.end(), labels[i].labels.begin(), labels[i].labels.end());
  }
  MatchOptions opts;
  opts.mode = MatchMode::kIdentity;
  res.report = cluster_miou(pred, gt, num_classes, num_classes, opts);
  return res;
}

MC_NAMESPACE_END
