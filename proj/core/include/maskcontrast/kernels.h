#pragma once

#include <cstdint>
#include <vector>

#include "maskcontrast/tensor.h"

// Raw compute kernels shared by the differentiable ops and the no-grad paths.
MC_NAMESPACE_BEGIN
namespace kernels {

/// C[m,n] (+)= A[m,k] * B[k,n], row-major.
void gemm(std::int64_t m, std::int64_t n, std::int64_t k, const Real* a, const Real* b, Real* c,
          bool accumulate);

/// C[m,n] (+)= A[k,m]^T * B[k,n].
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);

/// dst[cols,rows] = src[rows,cols]^T.
void transpose(std::int64_t rows, std::int64_t cols, const Real* src, Real* dst);

struct ConvGeometry {
  std::int64_t in_channels = 0;
  std::int64_t in_height = 0;
  std::int64_t in_width = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 0;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  std::int64_t out_height = 0;
  std::int64_t out_width = 0;

  std::int64_t patch_size() const { return in_channels * kernel_h * kernel_w; }
  std::int64_t out_pixels() const { return out_height * out_width; }
};

/// Validates input [C_in,H,W], kernel [C_out,C_in,kH,kW] and bias [C_out].
ConvGeometry conv_geometry(const Shape& input, const Shape& kernel, const Shape& bias, int stride, int padding);

/// cols[patch_size, out_pixels]
void im2col(const Real* input, const ConvGeometry& g, Real* cols);
/// Scatter-adds cols back into an input-shaped buffer.
void col2im(const Real* cols, const ConvGeometry& g, Real* input_grad);

/// Cross-correlation. If `cols` is non-null the im2col buffer is returned in it.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding,
              std::vector<Real>* cols = nullptr);

/// Interpolation weights for half-pixel bilinear resampling along one axis.
struct LinearTaps {
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> hi;
  std::vector<Real> w_lo;
  std::vector<Real> w_hi;
};
LinearTaps upsample_taps(std::int64_t in_size, int factor);

Tensor upsample_bilinear(const Tensor& input, int factor);
/// Adjoint of upsample_bilinear.
Tensor upsample_bilinear_adjoint(const Tensor& grad_output, const Shape& input_shape, int factor);

}  // namespace kernels
MC_NAMESPACE_END
