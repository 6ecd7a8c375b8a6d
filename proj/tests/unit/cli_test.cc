#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "maskcontrast/commands.h"
#include "maskcontrast/config.h"
#include "maskcontrast/dataset.h"
#include "maskcontrast/synth.h"

using namespace mc;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test, removed afterwards.
class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("maskcontrast_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    set_log_quiet(true);
  }
  void TearDown() override {
    set_log_quiet(false);
    fs::remove_all(dir_);
  }
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Mean absolute horizontal minus vertical gradient over the object, per
// image: stripes along one axis change only across it.
double orientation_statistic(const SynthImage& img) {
  const auto s = static_cast<int>(img.image.dim(1));
  double gx = 0, gy = 0;
  int n = 0;
  for (int y = 0; y + 1 < s; ++y)
    for (int x = 0; x + 1 < s; ++x) {
      if (!img.mask(y, x) || !img.mask(y, x + 1) || !img.mask(y + 1, x)) continue;
      const double v = img.image.at({1, y, x});
      gx += std::abs(img.image.at({1, y, x + 1}) - v);
      gy += std::abs(img.image.at({1, y + 1, x}) - v);
      ++n;
    }
  return (gx - gy) / n;
}

}  // namespace

TEST(Config, ParseText) {
  const auto kv = parse_config_text("# comment\n\nepochs = 3\n  base_lr=0.5  \n", "cfg");
  EXPECT_EQ(kv.at("epochs"), "3");
  EXPECT_EQ(kv.at("base_lr"), "0.5");
  try {
    parse_config_text("epochs 3\n", "run.cfg");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:1"), std::string::npos);
  }
}

TEST(Config, SetValidateDump) {
  RunConfig c;
  c.set("embed_dim", "16");
  c.set("channels", "4,8");
  c.set("temperature", "0.25");
  c.set("bank_size", "64");
  EXPECT_EQ(c.model.embed_dim, 16);
  EXPECT_EQ(c.model.channels, (std::vector<int>{4, 8}));
  EXPECT_DOUBLE_EQ(c.loss.temperature, 0.25);
  EXPECT_EQ(c.trainer.bank_size, 64);
  EXPECT_THROW(c.set("no_such_key", "1"), DataError);
  EXPECT_THROW(c.set("epochs", "three"), DataError);
  EXPECT_NE(c.dump().find("embed_dim=16"), std::string::npos);
  c.set("temperature", "0");
  EXPECT_THROW(c.validate(), DataError);
}

TEST(Synth, ContractHolds) {
  SynthConfig sc;
  sc.images = 60;
  sc.classes = 3;
  for (int i = 0; i < sc.images; ++i) {
    const SynthImage img = synth_image(sc, i);
    ASSERT_GE(img.mask.fraction(), 0.15) << i;
    ASSERT_GE(img.cls, 0);
    ASSERT_LT(img.cls, 3);
    for (std::size_t p = 0; p < img.mask.size(); ++p)
      ASSERT_EQ(img.labels.labels[p], img.mask.bits()[p] ? img.cls + 1 : 0);
  }
  EXPECT_EQ(synth_image(sc, 7).image, synth_image(sc, 7).image);
  sc.classes = 1;
  EXPECT_THROW(sc.validate(), DataError);
}

TEST(Synth, ClassStatisticsDiffer) {
  SynthConfig sc;
  std::vector<double> stat[2];
  for (int i = 0; i < sc.images; ++i) {
    const SynthImage img = synth_image(sc, i);
    stat[img.cls].push_back(orientation_statistic(img));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  ASSERT_GT(stat[0].size(), 10u);
  ASSERT_GT(stat[1].size(), 10u);
  const double se = std::sqrt(var(stat[0]) / static_cast<double>(stat[0].size()) +
                              var(stat[1]) / static_cast<double>(stat[1].size()));
  EXPECT_GT(std::abs(mean(stat[0]) - mean(stat[1])), 3 * se);
}

TEST_F(Scratch, SynthWritesMatchingTriples) {
  cmd_synth(SynthOptions{dir_, 10, 2, 16, 0});
  for (const char* sub : {"images", "saliency", "labels"})
    EXPECT_EQ(std::distance(fs::directory_iterator(dir_ / sub), fs::directory_iterator{}), 10) << sub;
  const Dataset ds = load_dataset(dir_, true);
  EXPECT_EQ(ds.size(), 10u);
  EXPECT_EQ(ds.samples[3].id, "00003");
  EXPECT_EQ(ds.max_label(), 2);
  // Written 8-bit rasters reproduce the generator exactly up to quantisation.
  SynthConfig sc;
  sc.images = 10;
  sc.size = 16;
  const SynthImage img = synth_image(sc, 3);
  EXPECT_EQ(ds.samples[3].saliency, img.mask);
  for (std::size_t i = 0; i < img.image.size(); ++i) ASSERT_NEAR(ds.samples[3].image[i], img.image[i], 0.5 / 255 + 1e-6);
}

TEST_F(Scratch, MissingSaliencyListsStems) {
  cmd_synth(SynthOptions{dir_, 4, 2, 16, 0});
  fs::remove(dir_ / "saliency" / "00001.pgm");
  fs::remove(dir_ / "saliency" / "00002.pgm");
  try {
    load_dataset(dir_, false);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("00001"), std::string::npos);
    EXPECT_NE(msg.find("00002"), std::string::npos);
  }
  fs::remove_all(dir_ / "saliency");
  std::ostringstream err;
  TrainOptions t;
  t.data = dir_;
  t.out = dir_ / "m.mckp";
  std::ostringstream log;
  EXPECT_EQ(run_guarded([&] { cmd_train(t, log); }, err), 2);
  EXPECT_NE(err.str().find("saliency"), std::string::npos);
}

TEST_F(Scratch, EmptyMasksAreDropped) {
  cmd_synth(SynthOptions{dir_, 3, 2, 16, 0});
  Raster blank{16, 16, 1, std::vector<std::uint8_t>(256, 0)};
  write_netpbm(dir_ / "saliency" / "00000.pgm", blank);
  const Dataset ds = load_dataset(dir_, false);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples[0].id, "00001");
}

TEST_F(Scratch, ZeroEpochsSavesInitialisation) {
  cmd_synth(SynthOptions{dir_ / "data", 4, 2, 16, 0});
  TrainOptions t;
  t.data = dir_ / "data";
  t.out = dir_ / "init.mckp";
  t.overrides = {{"epochs", "0"}, {"seed", "3"}, {"channels", "4,8"}, {"embed_dim", "6"}};
  std::ostringstream log;
  cmd_train(t, log);
  ModelConfig mc;
  mc.channels = {4, 8};
  mc.embed_dim = 6;
  mc.input_height = mc.input_width = 16;
  const ModelParams expect = init_model(mc, 3);
  const ModelParams got = load_model(t.out);
  for (std::size_t i = 0; i < expect.tensors().size(); ++i)
    EXPECT_EQ(*got.tensors()[i].second, *expect.tensors()[i].second);
  EXPECT_EQ(slurp(dir_ / "init.csv"), "epoch,contrastive_loss,aux_loss,total_loss,lr\n");
}

TEST_F(Scratch, SameSeedGivesIdenticalMetrics) {
  cmd_synth(SynthOptions{dir_ / "data", 8, 2, 16, 0});
  auto run = [&](const std::string& name) {
    TrainOptions t;
    t.data = dir_ / "data";
    t.out = dir_ / (name + ".mckp");
    t.overrides = {{"epochs", "2"}, {"batch_size", "4"}, {"channels", "4,8"}, {"embed_dim", "6"}, {"bank_size", "8"}};
    std::ostringstream log;
    cmd_train(t, log);
    return slurp(dir_ / (name + ".csv"));
  };
  const std::string a = run("a");
  EXPECT_EQ(a, run("b"));
  EXPECT_EQ(slurp(dir_ / "a.mckp"), slurp(dir_ / "b.mckp"));
}

TEST_F(Scratch, EvalIndexRetrieveRoundTrip) {
  cmd_synth(SynthOptions{dir_ / "data", 8, 2, 16, 0});
  TrainOptions t;
  t.data = dir_ / "data";
  t.out = dir_ / "m.mckp";
  t.overrides = {{"epochs", "0"}, {"channels", "4,8"}, {"embed_dim", "6"}};
  std::ostringstream log;
  cmd_train(t, log);

  EvalOptions e;
  e.checkpoint = t.out;
  e.data = t.data;
  e.saliency_from_file = true;
  e.runs = 2;
  const auto report = nlohmann::json::parse(cmd_eval(e));
  EXPECT_EQ(report["runs"], 2);
  EXPECT_EQ(report["per_class_iou"].size(), 3u);
  e.clusters = 1;
  EXPECT_THROW(cmd_eval(e), DataError);

  cmd_index(IndexOptions{t.out, t.data, dir_ / "train.mcsi", "train", false});
  RetrieveOptions r;
  r.index = dir_ / "train.mcsi";
  r.query = "00002";
  r.topk = 3;
  const auto res = nlohmann::json::parse(cmd_retrieve(r));
  ASSERT_EQ(res["queries"].size(), 1u);
  const auto& nn = res["queries"][0]["neighbors"];
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_EQ(nn[0]["id"], "00002");
  EXPECT_EQ(nn[0]["similarity"].get<double>(), 1.0);
  r.query = "nope";
  EXPECT_THROW(cmd_retrieve(r), DataError);
}

TEST(RunGuarded, ExitCodes) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded([] {}, err), 0);
  EXPECT_EQ(run_guarded([] { throw DataError("bad input"); }, err), 2);
  EXPECT_EQ(run_guarded([] { throw NumericError("nan"); }, err), 1);
  EXPECT_EQ(run_guarded([] { throw std::runtime_error("boom"); }, err), 1);
  EXPECT_NE(err.str().find("bad input"), std::string::npos);
}
