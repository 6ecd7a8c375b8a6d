#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskcontrast/common.h"

MC_NAMESPACE_BEGIN

/// 8-bit raster as stored on disk: interleaved channels, row-major.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (P5) or 3 (P6)
  std::vector<std::uint8_t> pixels;
};

/// Parses binary P5/P6 with maxval <= 255. Comments are accepted in the
/// header. Failures throw DataError naming `source` and the byte offset.
Raster parse_netpbm(const std::vector<std::uint8_t>& bytes, const std::string& source);
Raster read_netpbm(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_netpbm(const Raster& raster);
void write_netpbm(const std::filesystem::path& path, const Raster& raster);

MC_NAMESPACE_END
