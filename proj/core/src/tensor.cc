#include "maskcontrast/tensor.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

MC_NAMESPACE_BEGIN

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
    throw ShapeError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  std::vector<Real> v;
  v.reserve(values.size());
  for (double x : values) v.push_back(static_cast<Real>(x));
  return Tensor(std::move(shape), std::move(v));
}

std::int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

std::size_t Tensor::offset(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError("index rank " + std::to_string(index.size()) + " for shape " + shape_string(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i < 0 || i >= shape_[axis]) throw ShapeError("index out of range for shape " + shape_string(shape_));
    off = off * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(i);
    ++axis;
  }
  return off;
}

Real Tensor::at(std::initializer_list<std::int64_t> index) const { return data_[offset(index)]; }
Real& Tensor::at(std::initializer_list<std::int64_t> index) { return data_[offset(index)]; }

Real Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != static_cast<std::int64_t>(data_.size())) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (Real v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

namespace io {

void write_u32(std::ostream& out, std::uint32_t value) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("unexpected end of stream reading u32");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& out, float value) { write_u32(out, std::bit_cast<std::uint32_t>(value)); }

float read_f32(std::istream& in) { return std::bit_cast<float>(read_u32(in)); }

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, std::uint32_t max_len) {
  const std::uint32_t n = read_u32(in);
  if (n > max_len) throw DataError("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("unexpected end of stream reading string");
  return s;
}

}  // namespace io

void write_tensor(std::ostream& out, const Tensor& tensor) {
  out.write("MCT1", 4);
  io::write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.shape()) io::write_u32(out, static_cast<std::uint32_t>(d));
  for (Real v : tensor.values()) io::write_f32(out, static_cast<float>(v));
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MCT1", 4) != 0) throw DataError("bad MCT1 magic");
  const std::uint32_t rank = io::read_u32(in);
  if (rank > 8) throw DataError("MCT1 rank " + std::to_string(rank) + " too large");
  Shape shape(rank);
  for (auto& d : shape) {
    d = io::read_u32(in);
    if (d == 0) throw DataError("MCT1 zero dimension");
  }
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  std::vector<Real> values(n);
  for (auto& v : values) v = static_cast<Real>(io::read_f32(in));
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
  if (!out) throw Error("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_tensor(in);
}

MC_NAMESPACE_END
