#include "maskcontrast/kernels.h"

#include <algorithm>
#include <cmath>
#include <string>

MC_NAMESPACE_BEGIN
namespace kernels {

namespace {
// Column tile keeps a block of B resident in cache across the rows of A.
constexpr std::int64_t kColumnTile = 256;
}  // namespace

void gemm(std::int64_t m, std::int64_t n, std::int64_t k, const Real* a, const Real* b, Real* c,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, Real(0));
  for (std::int64_t j0 = 0; j0 < n; j0 += kColumnTile) {
    const std::int64_t j1 = std::min(n, j0 + kColumnTile);
    for (std::int64_t i = 0; i < m; ++i) {
      Real* crow = c + i * n;
      const Real* arow = a + i * k;
      for (std::int64_t p = 0; p < k; ++p) {
        const Real av = arow[p];
        if (av == Real(0)) continue;
        const Real* brow = b + p * n;
        for (std::int64_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, Real(0));
  for (std::int64_t j0 = 0; j0 < n; j0 += kColumnTile) {
    const std::int64_t j1 = std::min(n, j0 + kColumnTile);
    for (std::int64_t p = 0; p < k; ++p) {
      const Real* arow = a + p * m;
      const Real* brow = b + p * n;
      for (std::int64_t i = 0; i < m; ++i) {
        const Real av = arow[i];
        if (av == Real(0)) continue;
        Real* crow = c + i * n;
        for (std::int64_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

void transpose(std::int64_t rows, std::int64_t cols, const Real* src, Real* dst) {
  constexpr std::int64_t kBlock = 32;
  for (std::int64_t r0 = 0; r0 < rows; r0 += kBlock) {
    for (std::int64_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::int64_t r1 = std::min(rows, r0 + kBlock);
      const std::int64_t c1 = std::min(cols, c0 + kBlock);
      for (std::int64_t r = r0; r < r1; ++r)
        for (std::int64_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
    }
  }
}

ConvGeometry conv_geometry(const Shape& input, const Shape& kernel, const Shape& bias, int stride, int padding) {
  if (input.size() != 3) throw ShapeError("conv2d input must be [C_in,H,W], got " + shape_string(input));
  if (kernel.size() != 4) throw ShapeError("conv2d kernel must be [C_out,C_in,kH,kW], got " + shape_string(kernel));
  if (kernel[1] != input[0]) {
    throw ShapeError("conv2d channel mismatch: input C_in=" + std::to_string(input[0]) +
                     " kernel C_in=" + std::to_string(kernel[1]));
  }
  if (bias.size() != 1 || bias[0] != kernel[0]) {
    throw ShapeError("conv2d bias must be [" + std::to_string(kernel[0]) + "], got " + shape_string(bias));
  }
  if (kernel[2] % 2 == 0 || kernel[3] % 2 == 0) {
    throw ShapeError("conv2d kernel must be odd-sized, got kH=" + std::to_string(kernel[2]) +
                     " kW=" + std::to_string(kernel[3]));
  }
  if (stride < 1) throw ShapeError("conv2d stride must be >= 1, got " + std::to_string(stride));
  if (padding < 0) throw ShapeError("conv2d padding must be >= 0, got " + std::to_string(padding));

  ConvGeometry g;
  g.in_channels = input[0];
  g.in_height = input[1];
  g.in_width = input[2];
  g.out_channels = kernel[0];
  g.kernel_h = kernel[2];
  g.kernel_w = kernel[3];
  g.stride = stride;
  g.padding = padding;
  const std::int64_t span_h = g.in_height + 2 * padding - g.kernel_h;
  const std::int64_t span_w = g.in_width + 2 * padding - g.kernel_w;
  if (span_h < 0 || span_w < 0) {
    throw ShapeError("conv2d kernel " + shape_string(kernel) + " larger than padded input " + shape_string(input));
  }
  g.out_height = span_h / stride + 1;
  g.out_width = span_w / stride + 1;
  return g;
}

void im2col(const Real* input, const ConvGeometry& g, Real* cols) {
  const std::int64_t out_pixels = g.out_pixels();
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < g.in_channels; ++c) {
    const Real* plane = input + c * g.in_height * g.in_width;
    for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel_w; ++kx, ++row) {
        Real* dst = cols + row * out_pixels;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ky;
          Real* d = dst + oy * g.out_width;
          if (iy < 0 || iy >= g.in_height) {
            std::fill(d, d + g.out_width, Real(0));
            continue;
          }
          const Real* src = plane + iy * g.in_width;
          for (std::int64_t ox = 0; ox < g.out_width; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kx;
            d[ox] = (ix >= 0 && ix < g.in_width) ? src[ix] : Real(0);
          }
        }
      }
    }
  }
}

void col2im(const Real* cols, const ConvGeometry& g, Real* input_grad) {
  const std::int64_t out_pixels = g.out_pixels();
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < g.in_channels; ++c) {
    Real* plane = input_grad + c * g.in_height * g.in_width;
    for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel_w; ++kx, ++row) {
        const Real* src = cols + row * out_pixels;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.in_height) continue;
          Real* dst = plane + iy * g.in_width;
          const Real* s = src + oy * g.out_width;
          for (std::int64_t ox = 0; ox < g.out_width; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.in_width) dst[ix] += s[ox];
          }
        }
      }
    }
  }
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding,
              std::vector<Real>* cols_out) {
  const ConvGeometry g = conv_geometry(input.shape(), kernel.shape(), bias.shape(), stride, padding);
  const std::int64_t out_pixels = g.out_pixels();
  Tensor out(Shape{g.out_channels, g.out_height, g.out_width});
  for (std::int64_t o = 0; o < g.out_channels; ++o)
    std::fill(out.data() + o * out_pixels, out.data() + (o + 1) * out_pixels, bias[static_cast<std::size_t>(o)]);

  const bool pointwise = g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.padding == 0;
  if (pointwise) {
    // The input already is its own column matrix.
    gemm(g.out_channels, out_pixels, g.patch_size(), kernel.data(), input.data(), out.data(), true);
    if (cols_out) cols_out->assign(input.data(), input.data() + input.size());
    return out;
  }
  std::vector<Real> cols(static_cast<std::size_t>(g.patch_size() * out_pixels));
  im2col(input.data(), g, cols.data());
  gemm(g.out_channels, out_pixels, g.patch_size(), kernel.data(), cols.data(), out.data(), true);
  if (cols_out) *cols_out = std::move(cols);
  return out;
}

LinearTaps upsample_taps(std::int64_t in_size, int factor) {
  LinearTaps t;
  const std::int64_t out_size = in_size * factor;
  t.lo.resize(static_cast<std::size_t>(out_size));
  t.hi.resize(static_cast<std::size_t>(out_size));
  t.w_lo.resize(static_cast<std::size_t>(out_size));
  t.w_hi.resize(static_cast<std::size_t>(out_size));
  for (std::int64_t o = 0; o < out_size; ++o) {
    double src = (static_cast<double>(o) + 0.5) / factor - 0.5;
    if (src < 0) src = 0;
    auto lo = static_cast<std::int64_t>(std::floor(src));
    if (lo > in_size - 1) lo = in_size - 1;
    const std::int64_t hi = std::min(lo + 1, in_size - 1);
    const double frac = src - static_cast<double>(lo);
    const auto idx = static_cast<std::size_t>(o);
    t.lo[idx] = lo;
    t.hi[idx] = hi;
    t.w_hi[idx] = static_cast<Real>(frac);
    t.w_lo[idx] = static_cast<Real>(1.0 - frac);
  }
  return t;
}

Tensor upsample_bilinear(const Tensor& input, int factor) {
  if (input.rank() != 3) throw ShapeError("upsample expects [C,H,W], got " + shape_string(input.shape()));
  if (factor < 1) throw ShapeError("upsample factor must be >= 1");
  const std::int64_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::int64_t oh = h * factor, ow = w * factor;
  const LinearTaps ty = upsample_taps(h, factor);
  const LinearTaps tx = upsample_taps(w, factor);
  Tensor out(Shape{c, oh, ow});
  std::vector<Real> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const Real* in = input.data() + ch * h * w;
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < ow; ++x) {
        const auto i = static_cast<std::size_t>(x);
        rows[static_cast<std::size_t>(y * ow + x)] = tx.w_lo[i] * in[y * w + tx.lo[i]] + tx.w_hi[i] * in[y * w + tx.hi[i]];
      }
    Real* o = out.data() + ch * oh * ow;
    for (std::int64_t y = 0; y < oh; ++y) {
      const auto i = static_cast<std::size_t>(y);
      const Real* r0 = rows.data() + ty.lo[i] * ow;
      const Real* r1 = rows.data() + ty.hi[i] * ow;
      const Real a = ty.w_lo[i], b = ty.w_hi[i];
      for (std::int64_t x = 0; x < ow; ++x) o[y * ow + x] = a * r0[x] + b * r1[x];
    }
  }
  return out;
}

Tensor upsample_bilinear_adjoint(const Tensor& grad_output, const Shape& input_shape, int factor) {
  const std::int64_t c = input_shape[0], h = input_shape[1], w = input_shape[2];
  const std::int64_t oh = h * factor, ow = w * factor;
  if (grad_output.shape() != Shape{c, oh, ow}) {
    throw ShapeError("upsample adjoint: gradient shape " + shape_string(grad_output.shape()));
  }
  const LinearTaps ty = upsample_taps(h, factor);
  const LinearTaps tx = upsample_taps(w, factor);
  Tensor grad(input_shape);
  std::vector<Real> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    std::fill(rows.begin(), rows.end(), Real(0));
    const Real* g = grad_output.data() + ch * oh * ow;
    for (std::int64_t y = 0; y < oh; ++y) {
      const auto i = static_cast<std::size_t>(y);
      Real* r0 = rows.data() + ty.lo[i] * ow;
      Real* r1 = rows.data() + ty.hi[i] * ow;
      const Real a = ty.w_lo[i], b = ty.w_hi[i];
      for (std::int64_t x = 0; x < ow; ++x) {
        r0[x] += a * g[y * ow + x];
        r1[x] += b * g[y * ow + x];
      }
    }
    Real* dst = grad.data() + ch * h * w;
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < ow; ++x) {
        const auto i = static_cast<std::size_t>(x);
        const Real v = rows[static_cast<std::size_t>(y * ow + x)];
        dst[y * w + tx.lo[i]] += tx.w_lo[i] * v;
        dst[y * w + tx.hi[i]] += tx.w_hi[i] * v;
      }
  }
  return grad;
}

}  // namespace kernels
MC_NAMESPACE_END
