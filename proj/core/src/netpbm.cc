#include "maskcontrast/netpbm.h"

#include <cctype>
#include <fstream>
#include <iterator>

MC_NAMESPACE_BEGIN

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int read_uint(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(std::string("unexpected end of header reading ") + field);
    if (!std::isdigit(bytes_[pos_])) fail(std::string("expected digit for ") + field);
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 24)) fail(std::string(field) + " too large");
      ++pos_;
    }
    return static_cast<int>(value);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::uint8_t peek() const { return bytes_[pos_]; }
  bool at_end() const { return pos_ >= bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

Raster parse_netpbm(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  HeaderReader in(bytes, source);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    in.fail("bad magic (expected P5 or P6)");
  }
  Raster r;
  r.channels = bytes[1] == '6' ? 3 : 1;
  in.advance(2);
  if (in.at_end() || !std::isspace(in.peek())) in.fail("missing whitespace after magic");
  r.width = in.read_uint("width");
  r.height = in.read_uint("height");
  const int maxval = in.read_uint("maxval");
  if (r.width <= 0 || r.height <= 0) in.fail("zero image dimension");
  if (maxval <= 0 || maxval > 255) in.fail("unsupported maxval " + std::to_string(maxval));
  if (in.at_end() || !std::isspace(in.peek())) in.fail("missing whitespace after maxval");
  in.advance(1);

  const std::size_t need = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height) *
                           static_cast<std::size_t>(r.channels);
  if (bytes.size() - in.pos() < need) {
    in.fail("truncated raster: need " + std::to_string(need) + " bytes, have " + std::to_string(bytes.size() - in.pos()));
  }
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(in.pos()),
                  bytes.begin() + static_cast<std::ptrdiff_t>(in.pos() + need));
  if (maxval != 255) {
    for (auto& p : r.pixels) {
      if (p > maxval) in.fail("sample exceeds maxval");
      p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
    }
  }
  return r;
}

Raster read_netpbm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_netpbm(bytes, path.string());
}

std::vector<std::uint8_t> encode_netpbm(const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3) throw DataError("netpbm raster must have 1 or 3 channels");
  const std::string header = std::string(raster.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(raster.width) +
                             " " + std::to_string(raster.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.pixels.begin(), raster.pixels.end());
  return out;
}

void write_netpbm(const std::filesystem::path& path, const Raster& raster) {
  const auto bytes = encode_netpbm(raster);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

MC_NAMESPACE_END
