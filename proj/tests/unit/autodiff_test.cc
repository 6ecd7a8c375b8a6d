#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "maskcontrast/autodiff.h"
#include "maskcontrast/kernels.h"
#include "support/gradcheck.h"

using namespace mc;
using testkit::random_tensor;

namespace {

// Direct seven-loop cross-correlation.
Tensor naive_conv(const Tensor& in, const Tensor& k, const Tensor& b, int stride, int pad) {
  const auto ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const auto co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const auto oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  Tensor out(Shape{co, oh, ow});
  for (std::int64_t o = 0; o < co; ++o)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t x = 0; x < ow; ++x) {
        double s = b[static_cast<std::size_t>(o)];
        for (std::int64_t c = 0; c < ci; ++c)
          for (std::int64_t dy = 0; dy < kh; ++dy)
            for (std::int64_t dx = 0; dx < kw; ++dx) {
              const auto iy = y * stride + dy - pad, ix = x * stride + dx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              s += static_cast<double>(k.at({o, c, dy, dx})) * in.at({c, iy, ix});
            }
        out.at({o, y, x}) = static_cast<Real>(s);
      }
  return out;
}

void expect_near(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "element " << i;
}

}  // namespace

TEST(Conv2d, MatchesDirectLoops) {
  Rng rng(1);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      const Tensor in = random_tensor(Shape{3, 7, 6}, rng);
      const Tensor k = random_tensor(Shape{4, 3, 3, 3}, rng);
      const Tensor b = random_tensor(Shape{4}, rng);
      Graph g;
      const Var y = conv2d(g.constant(in), g.constant(k), g.constant(b), stride, pad);
      expect_near(y.value(), naive_conv(in, k, b, stride, pad), 1e-5);
    }
}

TEST(Conv2d, RejectsBadShapes) {
  Graph g;
  const Var in = g.constant(Tensor(Shape{3, 4, 4}));
  EXPECT_THROW(conv2d(in, g.constant(Tensor(Shape{2, 2, 3, 3})), g.constant(Tensor(Shape{2})), 1, 1), ShapeError);
  EXPECT_THROW(conv2d(in, g.constant(Tensor(Shape{2, 3, 3, 3})), g.constant(Tensor(Shape{3})), 1, 1), ShapeError);
  EXPECT_THROW(conv2d(in, g.constant(Tensor(Shape{2, 3, 2, 2})), g.constant(Tensor(Shape{2})), 1, 0), ShapeError);
}

TEST(Upsample, HalfPixelWeights) {
  // One row [0, 4] upsampled by 2: sample points -0.25, 0.25, 0.75, 1.25
  // (clamped at the borders).
  Graph g;
  const Var y = upsample_bilinear(g.constant(Tensor::from(Shape{1, 1, 2}, {0, 4})), 2);
  ASSERT_EQ(y.value().shape(), (Shape{1, 2, 4}));
  const std::vector<double> row{0, 1, 3, 4};
  for (int r = 0; r < 2; ++r)
    for (int x = 0; x < 4; ++x) EXPECT_NEAR(y.value().at({0, r, x}), row[static_cast<std::size_t>(x)], 1e-6);
}

TEST(Upsample, AdjointIdentity) {
  // <U x, y> == <x, U^T y>
  Rng rng(4);
  const Tensor x = random_tensor(Shape{2, 3, 5}, rng);
  const Tensor y = random_tensor(Shape{2, 12, 20}, rng);
  const Tensor ux = kernels::upsample_bilinear(x, 4);
  const Tensor uty = kernels::upsample_bilinear_adjoint(y, x.shape(), 4);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += static_cast<double>(ux[i]) * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += static_cast<double>(x[i]) * uty[i];
  EXPECT_NEAR(lhs, rhs, 1e-4 * std::abs(lhs) + 1e-5);
}

TEST(L2Normalize, UnitSlices) {
  Rng rng(2);
  Graph g;
  const Var y = l2_normalize(g.constant(random_tensor(Shape{5, 3, 4}, rng)), 0);
  for (std::int64_t p = 0; p < 12; ++p) {
    double n = 0;
    for (std::int64_t c = 0; c < 5; ++c) n += std::pow(y.value()[static_cast<std::size_t>(c * 12 + p)], 2);
    EXPECT_NEAR(n, 1.0, 1e-6);
  }
}

TEST(L2Normalize, ZeroSliceStaysZeroWithoutGradient) {
  Graph g;
  const Var x = g.parameter(Tensor::from(Shape{2, 2}, {0, 0, 3, 4}));
  const Var y = l2_normalize(x, 1);
  EXPECT_EQ(y.value()[0], 0);
  EXPECT_EQ(y.value()[1], 0);
  EXPECT_NEAR(y.value()[2], 0.6, 1e-7);
  g.backward(sum(y));
  EXPECT_EQ(x.grad()[0], 0);
  EXPECT_EQ(x.grad()[1], 0);
  const Real inf = std::numeric_limits<Real>::infinity();
  EXPECT_THROW(l2_normalize(g.constant(Tensor::from(Shape{1, 2}, {inf, 0})), 1), NumericError);
}

TEST(SoftmaxCrossEntropy, MatchesClosedForm) {
  Graph g;
  const Tensor l = Tensor::from(Shape{2, 3}, {1, 2, 3, 0, 0, 0});
  const std::vector<int> t{2, 0};
  const Var loss = softmax_cross_entropy(g.parameter(l), t);
  const double r0 = -3 + std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  const double r1 = std::log(3.0);
  EXPECT_NEAR(loss.scalar(), (r0 + r1) / 2, 1e-12);
}

TEST(SoftmaxCrossEntropy, IgnoreIndexAndRange) {
  Graph g;
  const Var l = g.parameter(Tensor::from(Shape{3, 2}, {5, -5, 0, 0, 7, 7}));
  const std::vector<int> t{255, 1, 255};
  const Var loss = softmax_cross_entropy(l, t, 255);
  EXPECT_NEAR(loss.scalar(), std::log(2.0), 1e-12);
  g.backward(loss);
  // Ignored rows receive no gradient.
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(l.grad().at({0, c}), 0);
    EXPECT_EQ(l.grad().at({2, c}), 0);
  }
  const std::vector<int> bad{0, 2, 0};
  EXPECT_THROW(softmax_cross_entropy(l, bad), DataError);
}

TEST(BinaryCrossEntropy, MatchesClosedFormAndIsStable) {
  Graph g;
  const std::vector<std::uint8_t> t{1, 0, 1};
  const Var loss = binary_cross_entropy(g.parameter(Tensor::from(Shape{3}, {0.5, -1.0, 200.0})), t);
  const auto sp = [](double x) { return std::log1p(std::exp(x)); };  // softplus
  EXPECT_NEAR(loss.scalar(), (sp(-0.5) + sp(-1.0) + 0.0) / 3, 1e-9);
  EXPECT_TRUE(std::isfinite(loss.scalar()));
}

TEST(MaskedPool, MeanAndSum) {
  Graph g;
  const Tensor e = Tensor::from(Shape{2, 1, 3}, {1, 2, 3, 10, 20, 30});
  const std::vector<std::uint8_t> m{1, 0, 1};
  const Var mean = masked_mean_pool(g.constant(e), m);
  const Var s = masked_sum_pool(g.constant(e), m);
  EXPECT_EQ(mean.value(), Tensor::from(Shape{2}, {2, 20}));
  EXPECT_EQ(s.value(), Tensor::from(Shape{2}, {4, 40}));
  EXPECT_THROW(masked_mean_pool(g.constant(e), std::vector<std::uint8_t>{0, 0, 0}), DataError);
}

TEST(SelectAndConcat, Layout) {
  Graph g;
  const Tensor e = Tensor::from(Shape{2, 1, 3}, {1, 2, 3, 10, 20, 30});
  const std::vector<std::int64_t> px{2, 0};
  const Var rows = select_pixels(g.constant(e), px);
  EXPECT_EQ(rows.value(), Tensor::from(Shape{2, 2}, {3, 30, 1, 10}));
  const std::vector<Var> blocks{rows, g.constant(Tensor::from(Shape{2}, {7, 8}))};
  EXPECT_EQ(concat_rows(blocks).value(), Tensor::from(Shape{3, 2}, {3, 30, 1, 10, 7, 8}));
  const std::vector<std::int64_t> out_of_range{3};
  EXPECT_THROW(select_pixels(g.constant(e), out_of_range), ShapeError);
}

TEST(Graph, SharedNodeAccumulatesGradient) {
  Graph g;
  const Var x = g.parameter(Tensor::from(Shape{2}, {1, 2}));
  const Var y = sum(add(scale(x, 3.0), x));
  g.backward(y);
  EXPECT_EQ(x.grad(), Tensor::from(Shape{2}, {4, 4}));
}

TEST(Graph, BackwardClearsPreviousGradients) {
  Graph g;
  const Var x = g.parameter(Tensor::from(Shape{2}, {1, 2}));
  const Var y = sum(x);
  g.backward(y);
  g.backward(y);
  EXPECT_EQ(x.grad(), Tensor::from(Shape{2}, {1, 1}));
}

TEST(Graph, DetachAndConstantsGetNoGradient) {
  Graph g;
  const Var x = g.parameter(Tensor::from(Shape{2}, {1, 2}));
  const Var c = g.constant(Tensor::from(Shape{2}, {3, 4}));
  const Var y = sum(add(detach(x), c));
  g.backward(y);
  EXPECT_TRUE(x.grad().empty());
  EXPECT_TRUE(c.grad().empty());
  EXPECT_FALSE(g.requires_grad(y.id()));
}

TEST(Graph, RejectsNonScalarLossAndMixedGraphs) {
  Graph g, h;
  const Var x = g.parameter(Tensor(Shape{2}));
  EXPECT_THROW(g.backward(x), ShapeError);
  const Var z = h.parameter(Tensor(Shape{2}));
  EXPECT_THROW(add(x, z), Error);
}

TEST(Graph, AncestorsFollowParents) {
  Graph g;
  const Var a = g.parameter(Tensor(Shape{1}));
  const Var b = g.parameter(Tensor(Shape{1}));
  const Var c = scale(a, 2.0);
  const auto anc = g.ancestors(c);
  EXPECT_TRUE(anc.count(a.id()));
  EXPECT_TRUE(anc.count(c.id()));
  EXPECT_FALSE(anc.count(b.id()));
}

TEST(Graph, ReductionsKeepExactAccumulator) {
  Graph g;
  // 1 + 1e-9 is not representable in float; the exact channel keeps it.
  const Var s = sum(g.constant(Tensor::from(Shape{2}, {1.0, 1e-9})));
  EXPECT_NEAR(s.scalar(), 1.0 + 1e-9, 1e-15);
}
