#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "maskcontrast/synth.h"
#include "maskcontrast/trainer.h"

using namespace mc;

namespace {

Dataset synth_dataset(int n, int size, std::uint64_t seed) {
  SynthConfig sc;
  sc.images = n;
  sc.size = size;
  sc.seed = seed;
  Dataset ds;
  for (int i = 0; i < n; ++i) {
    SynthImage img = synth_image(sc, i);
    ds.samples.push_back(Sample{std::to_string(i), img.image, img.mask, img.labels});
  }
  return ds;
}

ModelConfig tiny_model(int size) {
  ModelConfig c;
  c.embed_dim = 8;
  c.channels = {4, 8};
  c.input_height = c.input_width = size;
  return c;
}

TrainerConfig tiny_trainer(int epochs) {
  TrainerConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.bank_size = 16;
  t.seed = 5;
  return t;
}

}  // namespace

TEST(PolyLr, Values) {
  EXPECT_DOUBLE_EQ(poly_lr(0, 100, 0.1, 0.9), 0.1);
  EXPECT_DOUBLE_EQ(poly_lr(100, 100, 0.1, 0.9), 0.0);
  EXPECT_NEAR(poly_lr(50, 100, 0.1, 0.9), 0.1 * std::pow(0.5, 0.9), 1e-15);
  EXPECT_THROW(poly_lr(101, 100, 0.1, 0.9), DataError);
  EXPECT_THROW(poly_lr(0, 0, 0.1, 0.9), DataError);
}

TEST(PolyLr, NonIncreasing) {
  double prev = 1e9;
  for (int i = 0; i <= 37; ++i) {
    const double lr = poly_lr(i, 37, 0.004, 0.9);
    ASSERT_LE(lr, prev);
    prev = lr;
  }
}

TEST(Sgd, TwoStepsMatchHandComputation) {
  Tensor w = Tensor::from(Shape{2}, {1.0, -2.0});
  Tensor v(Shape{2});
  const Tensor g = Tensor::from(Shape{2}, {0.5, 0.25});
  const NamedTensors params{{"w", &w}};
  const NamedTensors vel{{"w", &v}};
  const ConstNamedTensors grads{{"w", &g}};
  sgd_step(params, grads, vel, 0.1, 0.9, 0.01);
  // v1 = g + 0.01 w0 = (0.51, 0.23); w1 = w0 - 0.1 v1
  EXPECT_NEAR(w[0], 1.0 - 0.051, 1e-6);
  EXPECT_NEAR(w[1], -2.0 - 0.023, 1e-6);
  const double v0 = 0.51, w0 = 1.0 - 0.051;
  sgd_step(params, grads, vel, 0.1, 0.9, 0.01);
  const double v2 = 0.9 * v0 + 0.5 + 0.01 * w0;
  EXPECT_NEAR(v[0], v2, 1e-6);
  EXPECT_NEAR(w[0], w0 - 0.1 * v2, 1e-6);
}

TEST(Sgd, NonFiniteGradientLeavesParametersUntouched) {
  Tensor a = Tensor::from(Shape{1}, {1.0}), b = Tensor::from(Shape{1}, {2.0});
  Tensor va(Shape{1}), vb(Shape{1});
  const Tensor ga = Tensor::from(Shape{1}, {1.0});
  Tensor gb = Tensor::from(Shape{1}, {0.0});
  gb[0] = std::numeric_limits<Real>::infinity();
  try {
    sgd_step({{"a", &a}, {"b", &b}}, {{"a", &ga}, {"b", &gb}}, {{"a", &va}, {"b", &vb}}, 0.1, 0.9, 0.0);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find('b'), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0f);
  EXPECT_EQ(va[0], 0.0f);
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  const Dataset ds = synth_dataset(4, 16, 0);
  const ModelParams init = init_model(tiny_model(16), 1);
  const TrainResult r = train(ds, init, AugmentConfig{}, LossConfig{}, tiny_trainer(0));
  EXPECT_TRUE(r.metrics.empty());
  for (std::size_t i = 0; i < init.tensors().size(); ++i)
    EXPECT_EQ(*r.query.tensors()[i].second, *init.tensors()[i].second);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const Dataset ds = synth_dataset(4, 16, 0);
  const ModelParams init = init_model(tiny_model(16), 1);
  TrainerConfig t = tiny_trainer(1);
  t.base_lr = 0;
  const TrainResult r = train(ds, init, AugmentConfig{}, LossConfig{}, t);
  ASSERT_EQ(r.metrics.size(), 1u);
  for (std::size_t i = 0; i < init.tensors().size(); ++i)
    EXPECT_EQ(*r.query.tensors()[i].second, *init.tensors()[i].second);
}

TEST(Train, DeterministicGivenSeed) {
  const Dataset ds = synth_dataset(8, 16, 1);
  const ModelParams init = init_model(tiny_model(16), 1);
  const TrainResult a = train(ds, init, AugmentConfig{}, LossConfig{}, tiny_trainer(2));
  const TrainResult b = train(ds, init, AugmentConfig{}, LossConfig{}, tiny_trainer(2));
  EXPECT_EQ(metrics_csv(a.metrics), metrics_csv(b.metrics));
  for (std::size_t i = 0; i < init.tensors().size(); ++i) {
    EXPECT_EQ(*a.query.tensors()[i].second, *b.query.tensors()[i].second);
    EXPECT_EQ(*a.key.tensors()[i].second, *b.key.tensors()[i].second);
  }
  TrainerConfig other = tiny_trainer(2);
  other.seed = 6;
  EXPECT_NE(metrics_csv(train(ds, init, AugmentConfig{}, LossConfig{}, other).metrics), metrics_csv(a.metrics));
}

TEST(Train, CallbackAndLearningRate) {
  const Dataset ds = synth_dataset(8, 16, 1);
  std::vector<int> seen;
  const TrainResult r = train(ds, init_model(tiny_model(16), 1), AugmentConfig{}, LossConfig{}, tiny_trainer(3),
                              [&](const EpochMetrics& m) { seen.push_back(m.epoch); });
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3}));
  ASSERT_EQ(r.metrics.size(), 3u);
  // Two steps per epoch, six in total.
  EXPECT_DOUBLE_EQ(r.metrics[0].lr, 0.004);
  EXPECT_DOUBLE_EQ(r.metrics[1].lr, poly_lr(2, 6, 0.004, 0.9));
  for (const auto& m : r.metrics) EXPECT_NEAR(m.total_loss, m.contrastive_loss + m.aux_loss, 1e-9);
}

TEST(Train, KeyNetworkTrailsQuery) {
  const Dataset ds = synth_dataset(8, 16, 1);
  const ModelParams init = init_model(tiny_model(16), 1);
  LossConfig frozen;
  frozen.momentum = 1.0;
  const TrainResult r = train(ds, init, AugmentConfig{}, frozen, tiny_trainer(1));
  EXPECT_EQ(r.key.encoder[0].weight, init.encoder[0].weight);
  EXPECT_NE(r.query.encoder[0].weight, init.encoder[0].weight);
  LossConfig copy;
  copy.momentum = 0.0;
  const TrainResult c = train(ds, init, AugmentConfig{}, copy, tiny_trainer(1));
  EXPECT_EQ(c.key.encoder[0].weight, c.query.encoder[0].weight);
}

// The contrastive term needs the full synthetic set to move (checked by the
// CLI loss-trend test); the saliency term already falls here.
TEST(Train, SaliencyLossDecreasesOnSyntheticData) {
  const Dataset ds = synth_dataset(16, 16, 2);
  TrainerConfig t = tiny_trainer(15);
  t.batch_size = 8;
  t.base_lr = 0.05;
  t.bank_size = 0;
  const TrainResult r = train(ds, init_model(tiny_model(16), 3), AugmentConfig{}, LossConfig{}, t);
  EXPECT_LT(r.metrics.back().aux_loss, r.metrics.front().aux_loss - 0.01);
}

TEST(Metrics, CsvFormat) {
  std::vector<EpochMetrics> m{{1, 4.5, 0.5, 5.0, 0.004}, {2, 4.25, 0.25, 4.5, 0.002}};
  EXPECT_EQ(metrics_csv(m),
            "epoch,contrastive_loss,aux_loss,total_loss,lr\n"
            "1,4.5,0.5,5,0.004\n"
            "2,4.25,0.25,4.5,0.002\n");
}

TEST(Finetune, LabeledSubset) {
  EXPECT_EQ(labeled_subset(5, 1.0, 0), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  const auto s = labeled_subset(100, 0.1, 3);
  EXPECT_EQ(s.size(), 10u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 10u);
  EXPECT_EQ(labeled_subset(100, 0.1, 3), s);
  EXPECT_EQ(labeled_subset(10, 0.01, 3).size(), 1u);
}

TEST(Finetune, TrainsOnlyBodyAndHead) {
  const Dataset ds = synth_dataset(8, 16, 4);
  const ModelParams pre = init_model(tiny_model(16), 1);
  FinetuneConfig fc;
  fc.trainer = tiny_trainer(4);
  fc.trainer.base_lr = 0.01;
  const FinetuneResult r = supervised_finetune(ds, pre, fc);
  EXPECT_EQ(r.model.num_classes(), 3);
  ASSERT_EQ(r.metrics.size(), 4u);
  EXPECT_LT(r.metrics.back().loss, r.metrics.front().loss);
  EXPECT_NE(r.model.body.encoder[0].weight, pre.encoder[0].weight);
  // The embedding head is not part of the classifier and stays as it was.
  EXPECT_EQ(r.model.body.embed_head.weight, pre.embed_head.weight);
  const Tensor logits = classify(r.model, ds.samples[0].image);
  EXPECT_EQ(logits.shape(), (Shape{3, 16, 16}));
}

TEST(Finetune, ClassifierCheckpointRoundTrip) {
  const Classifier c = init_classifier(init_model(tiny_model(16), 1), 4, 2);
  const auto path = std::filesystem::temp_directory_path() / "maskcontrast_classifier.mckp";
  save_classifier(path, c);
  const Classifier back = load_classifier(path);
  EXPECT_EQ(back.head.weight, c.head.weight);
  EXPECT_EQ(back.body.decoder.weight, c.body.decoder.weight);
  Rng rng(1);
  Tensor img(Shape{3, 16, 16});
  for (Real& v : img.values()) v = static_cast<Real>(rng.uniform());
  EXPECT_EQ(classify(back, img), classify(c, img));
  std::filesystem::remove(path);
}
