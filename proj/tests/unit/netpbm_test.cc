#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "maskcontrast/dataset.h"
#include "maskcontrast/netpbm.h"

using namespace mc;

namespace {

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::string error_of(const std::vector<std::uint8_t>& b) {
  try {
    parse_netpbm(b, "img.pgm");
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Netpbm, ParsesP5WithComment) {
  std::string s = "P5\n# made by hand\n3 2\n255\n";
  s += std::string("\x00\x10\x20\x30\x40\xff", 6);
  const Raster r = parse_netpbm(bytes(s), "a.pgm");
  EXPECT_EQ(r.width, 3);
  EXPECT_EQ(r.height, 2);
  EXPECT_EQ(r.channels, 1);
  EXPECT_EQ(r.pixels, (std::vector<std::uint8_t>{0, 0x10, 0x20, 0x30, 0x40, 0xff}));
}

TEST(Netpbm, ParsesP6) {
  std::string s = "P6 1 1 255\n";
  s += std::string("\x01\x02\x03", 3);
  const Raster r = parse_netpbm(bytes(s), "a.ppm");
  EXPECT_EQ(r.channels, 3);
  EXPECT_EQ(r.pixels, (std::vector<std::uint8_t>{1, 2, 3}));
}

TEST(Netpbm, RescalesSmallMaxval) {
  std::string s = "P5 2 1 1\n";
  s += std::string("\x00\x01", 2);
  EXPECT_EQ(parse_netpbm(bytes(s), "m.pgm").pixels, (std::vector<std::uint8_t>{0, 255}));
}

TEST(Netpbm, MalformedHeaderNamesFileAndOffset) {
  const std::string bad_magic = error_of(bytes("P3\n1 1\n255\n\x01"));
  EXPECT_NE(bad_magic.find("img.pgm"), std::string::npos);
  EXPECT_NE(bad_magic.find("byte offset 0"), std::string::npos);

  // The width field starts at offset 3.
  const std::string bad_width = error_of(bytes("P5\nx 1\n255\n\x01"));
  EXPECT_NE(bad_width.find("byte offset 3"), std::string::npos) << bad_width;

  const std::string big_maxval = error_of(bytes("P5 1 1 65535\n\x01\x01"));
  EXPECT_NE(big_maxval.find("maxval"), std::string::npos);

  const std::string truncated = error_of(bytes("P5 4 4 255\n\x01\x02"));
  EXPECT_NE(truncated.find("truncated"), std::string::npos);
}

TEST(Netpbm, EncodeParseRoundTrip) {
  Raster r{4, 3, 3, {}};
  for (int i = 0; i < 36; ++i) r.pixels.push_back(static_cast<std::uint8_t>(i * 7));
  const Raster back = parse_netpbm(encode_netpbm(r), "rt.ppm");
  EXPECT_EQ(back.width, 4);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.pixels, r.pixels);
}

TEST(Netpbm, ImageConversionRoundTrip) {
  Raster r{2, 2, 3, {0, 64, 128, 255, 1, 2, 3, 4, 5, 6, 7, 8}};
  const Tensor img = image_from_raster(r, "x");
  EXPECT_EQ(img.shape(), (Shape{3, 2, 2}));
  // Planar layout: channel 1 of pixel 0 is the second stored byte.
  EXPECT_FLOAT_EQ(img.at({1, 0, 0}), 64.0f / 255.0f);
  EXPECT_EQ(raster_from_image(img).pixels, r.pixels);
}

TEST(Netpbm, MaskThreshold) {
  Raster r{4, 1, 1, {0, 127, 128, 255}};
  const ObjectMask m = mask_from_raster(r, "m");
  EXPECT_EQ(m.foreground(), (std::vector<std::int64_t>{2, 3}));
}
