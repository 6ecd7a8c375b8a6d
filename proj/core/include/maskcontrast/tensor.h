#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "maskcontrast/common.h"

MC_NAMESPACE_BEGIN

using Shape = std::vector<std::int64_t>;

std::string shape_string(const Shape& shape);
std::int64_t shape_numel(const Shape& shape);

/// Dense row-major array of reals. Value type: copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real value) { return Tensor(Shape{}, std::vector<Real>{value}); }
  static Tensor from(Shape shape, std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  /// Element at a multi-index; bounds are checked.
  Real at(std::initializer_list<std::int64_t> index) const;
  Real& at(std::initializer_list<std::int64_t> index);

  /// The single element of a one-element tensor.
  Real item() const;

  Tensor reshaped(Shape shape) const;
  bool all_finite() const;
  void fill(Real value);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::initializer_list<std::int64_t> index) const;

  Shape shape_;
  std::vector<Real> data_;
};

/// MCT1 container: "MCT1", u32 rank, rank x u32 dims, f32 payload, all
/// little-endian.
void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor load_tensor(const std::filesystem::path& path);

namespace io {
void write_u32(std::ostream& out, std::uint32_t value);
std::uint32_t read_u32(std::istream& in);
void write_f32(std::ostream& out, float value);
float read_f32(std::istream& in);
void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in, std::uint32_t max_len = 1u << 20);
}  // namespace io

MC_NAMESPACE_END
