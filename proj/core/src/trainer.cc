#include "maskcontrast/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "maskcontrast/rng.h"

MC_NAMESPACE_BEGIN

namespace {

constexpr std::uint64_t kShuffleStream = 0x5u;
constexpr std::uint64_t kSubsetStream = 0xf1u;

bool is_body(const std::string& name) { return name.rfind("encoder.", 0) == 0 || name.rfind("decoder.", 0) == 0; }

ConstNamedTensors body_tensors(const ModelParams& p) {
  ConstNamedTensors out;
  for (const auto& entry : p.tensors())
    if (is_body(entry.first)) out.push_back(entry);
  return out;
}

std::vector<std::int64_t> all_pixels(std::int64_t n) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

void TrainerConfig::validate() const {
  if (epochs < 0) throw DataError("epochs must be >= 0");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(base_lr >= 0.0)) throw DataError("base_lr must be >= 0");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) throw DataError("sgd_momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw DataError("weight_decay must be >= 0");
  if (!(poly_power >= 0.0)) throw DataError("poly_power must be >= 0");
  if (bank_size < 0) throw DataError("bank_size must be >= 0");
}

double poly_lr(std::int64_t iter, std::int64_t max_iter, double base_lr, double power) {
  if (max_iter <= 0) throw DataError("poly_lr: max_iter must be positive");
  if (iter < 0 || iter > max_iter) {
    throw DataError("poly_lr: iteration " + std::to_string(iter) + " outside [0," + std::to_string(max_iter) + "]");
  }
  return base_lr * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

void sgd_step(const NamedTensors& params, const ConstNamedTensors& grads, const NamedTensors& velocity, double lr,
              double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeError("sgd_step: parameter, gradient and velocity lists differ in length");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& w = *params[i].second;
    if (grads[i].second->shape() != w.shape() || velocity[i].second->shape() != w.shape()) {
      throw ShapeError("sgd_step: shape mismatch for " + params[i].first);
    }
    if (!grads[i].second->all_finite()) throw NumericError("non-finite gradient in parameter " + params[i].first);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].second;
    Tensor& v = *velocity[i].second;
    const Tensor& g = *grads[i].second;
    for (std::size_t e = 0; e < w.size(); ++e) {
      const double ve = momentum * v[e] + g[e] + weight_decay * w[e];
      v[e] = static_cast<Real>(ve);
      w[e] = static_cast<Real>(w[e] - lr * ve);
    }
  }
}

void sgd_step(ModelParams& params, const ModelParams& grads, ModelParams& velocity, double lr, double momentum,
              double weight_decay) {
  sgd_step(params.tensors(), grads.tensors(), velocity.tensors(), lr, momentum, weight_decay);
}

TrainResult train(const Dataset& data, const ModelParams& init, const AugmentConfig& augment, const LossConfig& loss,
                  const TrainerConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  loss.validate();
  init.config.validate();
  if (data.empty()) throw DataError("train: empty dataset");
  AugmentConfig aug = augment;
  aug.output_height = init.config.input_height;
  aug.output_width = init.config.input_width;
  aug.validate();

  TrainResult result;
  result.query = init;
  result.key = init;
  ModelParams velocity = init.zeros_like();
  MemoryBank bank(config.bank_size, init.config.embed_dim);

  const auto n = static_cast<std::int64_t>(data.size());
  const std::int64_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::int64_t max_iter = steps_per_epoch * config.epochs;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::int64_t iter = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng order_rng(derive_seed(config.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), order_rng);
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.lr = poly_lr(iter, max_iter, config.base_lr, config.poly_power);
    int counted = 0;
    for (std::int64_t start = 0; start < n; start += config.batch_size, ++iter) {
      const double lr = poly_lr(iter, max_iter, config.base_lr, config.poly_power);
      const std::int64_t stop = std::min(n, start + config.batch_size);
      std::vector<ViewPair> batch;
      batch.reserve(static_cast<std::size_t>(stop - start));
      for (std::int64_t i = start; i < stop; ++i) {
        const std::size_t idx = order[static_cast<std::size_t>(i)];
        const Sample& s = data.samples[idx];
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1, idx));
        View q = sample_view(s.image, s.saliency, aug, rng);
        View k = sample_view(s.image, s.saliency, aug, rng);
        batch.push_back(ViewPair{std::move(q), std::move(k)});
      }

      Graph graph;
      const ModelVars qv = bind(graph, result.query, true);
      const ModelVars kv = bind(graph, result.key, false);
      auto terms = maskcontrast_objective(graph, qv, kv, init.config, batch, bank, loss);
      if (!terms) {
        ++result.skipped_steps;
        continue;
      }
      graph.backward(terms->total);
      const ModelParams grads = collect_gradients(qv, result.query);
      sgd_step(result.query, grads, velocity, lr, config.sgd_momentum, config.weight_decay);
      momentum_update(result.key, result.query, loss.momentum);
      bank.enqueue(terms->key_prototypes);

      m.contrastive_loss += terms->contrastive.scalar();
      m.aux_loss += terms->aux.scalar();
      m.total_loss += terms->total.scalar();
      ++counted;
    }
    if (counted > 0) {
      m.contrastive_loss /= counted;
      m.aux_loss /= counted;
      m.total_loss /= counted;
    }
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,contrastive_loss,aux_loss,total_loss,lr\n";
  char line[160];
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g\n", m.epoch, m.contrastive_loss, m.aux_loss,
                  m.total_loss, m.lr);
    out += line;
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << metrics_csv(metrics);
  if (!f) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

void FinetuneConfig::validate() const {
  trainer.validate();
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) {
    throw DataError("label fraction must lie in (0,1], got " + std::to_string(label_fraction));
  }
  if (!(head_lr_multiplier > 0.0)) throw DataError("head_lr_multiplier must be > 0");
  if (num_classes < 0) throw DataError("num_classes must be >= 0");
}

std::vector<std::size_t> labeled_subset(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DataError("label fraction must lie in (0,1], got " + std::to_string(fraction));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (fraction == 1.0) return idx;
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  Rng rng(derive_seed(seed, kSubsetStream));
  shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(take, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Classifier init_classifier(const ModelParams& body, int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw DataError("classifier needs at least 2 classes");
  Classifier c;
  c.body = body;
  const std::int64_t features = body.decoder.weight.dim(0);
  c.head = ConvLayer{Tensor(Shape{num_classes, features, 1, 1}), Tensor(Shape{num_classes})};
  Rng rng(derive_seed(seed, 0xc1a55u));
  const double bound = std::sqrt(1.0 / static_cast<double>(features));
  for (Real& v : c.head.weight.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
  return c;
}

namespace {

Var class_logits(Graph& g, const ModelVars& body, const ConvVars& head, const Tensor& image, const ModelConfig& cfg) {
  const Var features = forward_features(body, g.constant(image), cfg);
  return conv2d(features, head.weight, head.bias, 1, 0);
}

}  // namespace

Tensor classify(const Classifier& model, const Tensor& image) {
  Graph g;
  const ModelVars body = bind(g, model.body, false);
  const ConvVars head{g.constant(model.head.weight), g.constant(model.head.bias)};
  return class_logits(g, body, head, image, model.body.config).value();
}

FinetuneResult supervised_finetune(const Dataset& data, const ModelParams& pretrained, const FinetuneConfig& config) {
  config.validate();
  if (data.empty()) throw DataError("finetune: empty dataset");
  if (!data.has_labels()) throw DataError("finetune needs label maps for every image");
  const int classes = config.num_classes > 0 ? config.num_classes : data.max_label() + 1;
  if (data.max_label() >= classes) {
    throw DataError("label id " + std::to_string(data.max_label()) + " exceeds class count " + std::to_string(classes));
  }
  const TrainerConfig& tc = config.trainer;

  FinetuneResult result;
  result.model = init_classifier(pretrained, classes, tc.seed);
  result.labeled = labeled_subset(data.size(), config.label_fraction, tc.seed);
  Classifier& model = result.model;
  Classifier velocity{model.body.zeros_like(), ConvLayer{Tensor(model.head.weight.shape()), Tensor(model.head.bias.shape())}};

  auto body_params = [](ModelParams& p) {
    NamedTensors out;
    for (auto& entry : p.tensors())
      if (is_body(entry.first)) out.push_back(entry);
    return out;
  };

  std::vector<std::size_t> order = result.labeled;
  const auto n = static_cast<std::int64_t>(order.size());
  const std::int64_t steps_per_epoch = (n + tc.batch_size - 1) / tc.batch_size;
  const std::int64_t max_iter = steps_per_epoch * tc.epochs;
  std::int64_t iter = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng order_rng(derive_seed(tc.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), order_rng);
    FinetuneMetrics fm;
    fm.epoch = epoch + 1;
    fm.lr = poly_lr(iter, max_iter, tc.base_lr, tc.poly_power);
    std::int64_t correct = 0, total = 0;
    for (std::int64_t start = 0; start < n; start += tc.batch_size, ++iter) {
      const double lr = poly_lr(iter, max_iter, tc.base_lr, tc.poly_power);
      const std::int64_t stop = std::min(n, start + tc.batch_size);
      Graph g;
      const ModelVars body = bind(g, model.body, true);
      const ConvVars head{g.parameter(model.head.weight), g.parameter(model.head.bias)};
      Var loss_sum;
      for (std::int64_t i = start; i < stop; ++i) {
        const Sample& s = data.samples[order[static_cast<std::size_t>(i)]];
        const Var logits = class_logits(g, body, head, s.image, model.body.config);
        const std::int64_t pixels = logits.value().dim(1) * logits.value().dim(2);
        const Var rows = select_pixels(logits, all_pixels(pixels));
        std::vector<int> targets(s.labels->labels.begin(), s.labels->labels.end());
        const Var l = softmax_cross_entropy(rows, targets, LabelMap::kIgnore);
        loss_sum = loss_sum.valid() ? add(loss_sum, l) : l;
        const Tensor& r = rows.value();
        for (std::int64_t p = 0; p < pixels; ++p) {
          const int t = targets[static_cast<std::size_t>(p)];
          if (t == LabelMap::kIgnore) continue;
          const Real* row = r.data() + p * classes;
          correct += (std::max_element(row, row + classes) - row) == t;
          ++total;
        }
      }
      const Var loss = scale(loss_sum, 1.0 / static_cast<double>(stop - start));
      g.backward(loss);
      fm.loss += loss.scalar();

      const ModelParams grads = collect_gradients(body, model.body);
      sgd_step(body_params(model.body), body_tensors(grads), body_params(velocity.body), lr, tc.sgd_momentum,
               tc.weight_decay);
      const Tensor hw = head.weight.grad().empty() ? Tensor(model.head.weight.shape()) : head.weight.grad();
      const Tensor hb = head.bias.grad().empty() ? Tensor(model.head.bias.shape()) : head.bias.grad();
      sgd_step({{"class_head.weight", &model.head.weight}, {"class_head.bias", &model.head.bias}},
               {{"class_head.weight", &hw}, {"class_head.bias", &hb}},
               {{"class_head.weight", &velocity.head.weight}, {"class_head.bias", &velocity.head.bias}},
               lr * config.head_lr_multiplier, tc.sgd_momentum, tc.weight_decay);
    }
    if (steps_per_epoch > 0) fm.loss /= static_cast<double>(steps_per_epoch);
    fm.pixel_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    result.metrics.push_back(fm);
  }
  return result;
}

void save_classifier(const std::filesystem::path& path, const Classifier& model) {
  ConstNamedTensors records = body_tensors(model.body);
  const Tensor input_size = Tensor::from(Shape{2}, {static_cast<double>(model.body.config.input_height),
                                                    static_cast<double>(model.body.config.input_width)});
  records.emplace_back("class_head.weight", &model.head.weight);
  records.emplace_back("class_head.bias", &model.head.bias);
  records.emplace_back("meta.input_size", &input_size);
  write_checkpoint(path, records);
}

Classifier load_classifier(const std::filesystem::path& path) {
  auto records = read_checkpoint(path);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : records) by_name[name] = &t;
  if (!by_name.count("class_head.weight") || !by_name.count("class_head.bias")) {
    throw DataError(path.string() + ": not a classifier checkpoint (no class_head records)");
  }
  Classifier c;
  c.head = ConvLayer{*by_name["class_head.weight"], *by_name["class_head.bias"]};
  // The embedding and saliency heads are not stored; give the loader shapes
  // that chain so the body validates.
  const std::int64_t f = by_name.count("decoder.weight") ? by_name["decoder.weight"]->dim(0) : 0;
  if (f <= 0) throw DataError(path.string() + ": missing decoder.weight");
  const Tensor eh_w(Shape{2, f, 1, 1}), eh_b(Shape{2}), sh_w(Shape{1, f, 1, 1}), sh_b(Shape{1});
  records.emplace_back("embed_head.weight", eh_w);
  records.emplace_back("embed_head.bias", eh_b);
  records.emplace_back("saliency_head.weight", sh_w);
  records.emplace_back("saliency_head.bias", sh_b);
  c.body = model_from_records(records);
  return c;
}

MC_NAMESPACE_END
