#include <gtest/gtest.h>

#include <algorithm>

#include "maskcontrast/augment.h"
#include "support/gradcheck.h"

using namespace mc;
using testkit::random_tensor;

namespace {

ObjectMask disc(int s, double r) {
  ObjectMask m(s, s);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const double dy = y + 0.5 - s / 2.0, dx = x + 0.5 - s / 2.0;
      m.set(y, x, dy * dy + dx * dx <= r * r);
    }
  return m;
}

AugmentConfig no_photometric(int out) {
  AugmentConfig c;
  c.brightness = c.contrast = c.saturation = 0;
  c.grayscale_prob = 0;
  c.output_height = c.output_width = out;
  return c;
}

}  // namespace

TEST(Augment, IdentityCropIsExact) {
  Rng rng(1);
  const Tensor img = random_tensor(Shape{3, 6, 8}, rng, 0, 1);
  EXPECT_EQ(crop_resize_bilinear(img, CropBox{0, 0, 6, 8}, 6, 8), img);
  const ObjectMask m = disc(8, 3);
  EXPECT_EQ(crop_resize_nearest(m, CropBox{0, 0, 8, 8}, 8, 8), m);
}

TEST(Augment, NearestCropPicksSourcePixels) {
  ObjectMask m(4, 4);
  m.set(2, 3, true);
  // The bottom-right 2x2 window upsampled to 4x4: pixel (2,3) covers the
  // top-right quadrant of the output.
  const ObjectMask out = crop_resize_nearest(m, CropBox{2, 2, 2, 2}, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(out(y, x), (y < 2 && x >= 2) ? 1 : 0) << y << "," << x;
}

TEST(Augment, FlipIsAnInvolution) {
  Rng rng(2);
  const Tensor img = random_tensor(Shape{3, 5, 7}, rng);
  EXPECT_EQ(hflip(hflip(img)), img);
  EXPECT_EQ(hflip(img).at({1, 2, 0}), img.at({1, 2, 6}));
  const ObjectMask m = disc(7, 2.5);
  EXPECT_EQ(hflip(hflip(m)), m);
}

TEST(Augment, JitterIdentityAndBrightness) {
  Rng rng(3);
  const Tensor img = random_tensor(Shape{3, 4, 4}, rng, 0, 0.5);
  Tensor same = img;
  color_jitter(same, 1, 1, 1);
  EXPECT_EQ(same, img);
  Tensor bright = img;
  color_jitter(bright, 1.5, 1, 1);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(bright[i], 1.5 * img[i], 1e-6);
}

TEST(Augment, JitterStaysInRange) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    Tensor img = random_tensor(Shape{3, 3, 3}, rng, 0, 1);
    color_jitter(img, rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(0, 2));
    for (Real v : img.values()) {
      ASSERT_GE(v, 0);
      ASSERT_LE(v, 1);
    }
  }
}

TEST(Augment, GrayscaleEqualisesChannels) {
  Rng rng(5);
  Tensor img = random_tensor(Shape{3, 2, 2}, rng, 0, 1);
  const Tensor orig = img;
  to_grayscale(img);
  for (std::int64_t p = 0; p < 4; ++p) {
    const double expect = 0.299 * orig[static_cast<std::size_t>(p)] + 0.587 * orig[static_cast<std::size_t>(4 + p)] +
                          0.114 * orig[static_cast<std::size_t>(8 + p)];
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(img[static_cast<std::size_t>(c * 4 + p)], expect, 1e-6);
  }
}

TEST(Augment, FullCropWithForcedFlip) {
  Rng rng(6);
  const Tensor img = random_tensor(Shape{3, 8, 8}, rng, 0, 1);
  const ObjectMask m = disc(8, 3);
  AugmentConfig c = no_photometric(8);
  c.crop_scale_min = c.crop_scale_max = 1.0;
  c.aspect_min = c.aspect_max = 1.0;
  c.flip_prob = 1.0;
  Rng view_rng(7);
  const View v = sample_view(img, m, c, view_rng);
  EXPECT_EQ(v.image, hflip(img));
  EXPECT_EQ(v.mask, hflip(m));
}

TEST(Augment, ViewsKeepEnoughObject) {
  Rng rng(8);
  const Tensor img = random_tensor(Shape{3, 32, 32}, rng, 0, 1);
  const ObjectMask m = disc(32, 8);
  AugmentConfig c;
  c.output_height = c.output_width = 16;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed);
    const View v = sample_view(img, m, c, r);
    ASSERT_EQ(v.image.shape(), (Shape{3, 16, 16}));
    ASSERT_EQ(v.mask.height(), 16);
    ASSERT_GT(v.mask.fraction(), c.min_object_area) << "seed " << seed;
    for (Real x : v.image.values()) ASSERT_TRUE(x >= 0 && x <= 1);
  }
}

TEST(Augment, TinyObjectFallsBackToBoundingBox) {
  Rng rng(9);
  const Tensor img = random_tensor(Shape{3, 32, 32}, rng, 0, 1);
  ObjectMask m(32, 32);
  for (int y = 10; y < 12; ++y)
    for (int x = 20; x < 22; ++x) m.set(y, x, true);
  const AugmentConfig c = no_photometric(8);
  Rng r(1);
  const View v = sample_view(img, m, c, r);
  EXPECT_EQ(v.mask.count(), 64);
}

TEST(Augment, SameSeedSameView) {
  Rng rng(10);
  const Tensor img = random_tensor(Shape{3, 16, 16}, rng, 0, 1);
  const ObjectMask m = disc(16, 5);
  AugmentConfig c;
  c.output_height = c.output_width = 16;
  Rng a(42), b(42);
  const View va = sample_view(img, m, c, a);
  const View vb = sample_view(img, m, c, b);
  EXPECT_EQ(va.image, vb.image);
  EXPECT_EQ(va.mask, vb.mask);
}

TEST(Augment, RejectsBadInput) {
  Rng rng(1);
  AugmentConfig c;
  EXPECT_THROW(sample_view(Tensor(Shape{3, 8, 8}), ObjectMask(8, 8), c, rng), DataError);
  EXPECT_THROW(sample_view(Tensor(Shape{3, 8, 8}), disc(6, 2), c, rng), ShapeError);
  c.min_object_area = 0;
  EXPECT_THROW(c.validate(), DataError);
  c = AugmentConfig{};
  c.crop_scale_min = 0.9;
  c.crop_scale_max = 0.5;
  EXPECT_THROW(c.validate(), DataError);
}

TEST(Remap, TargetsFollowImageIndex) {
  ObjectMask a(2, 2), b(2, 2), empty(2, 2);
  a.set(0, 1, true);
  b.set(1, 0, true);
  b.set(1, 1, true);
  const std::vector<ObjectMask> masks{a, empty, b};
  const Remap r = remap(masks);
  EXPECT_EQ(r.salient_pixels(), 3);
  EXPECT_EQ(r.targets, (std::vector<int>{0, 2, 2}));
  EXPECT_EQ(r.pixels[0], (std::vector<std::int64_t>{1}));
  EXPECT_TRUE(r.pixels[1].empty());
  EXPECT_EQ(r.pixels[2], (std::vector<std::int64_t>{2, 3}));
}
