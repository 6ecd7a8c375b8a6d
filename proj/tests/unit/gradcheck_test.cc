// Finite-difference checks of every differentiable op and of the full loss.
// Built twice: against the 32-bit library and against the 64-bit one.

#include <gtest/gtest.h>

#include "support/grad_suite.h"

using namespace mc;
using namespace mc::testkit;

class GradSuite : public ::testing::TestWithParam<std::string> {};

TEST_P(GradSuite, AnalyticMatchesCentralDifference) {
  for (const GradCase& c : all_grad_cases()) {
    if (c.name != GetParam()) continue;
    const GradTolerance tol = grad_tolerance();
    const GradCheckReport rep = grad_check(c.inputs, c.build, tol.step, c.checked);
    EXPECT_LT(rep.max_relative, tol.limit) << c.name << ": " << rep.describe();
    return;
  }
  FAIL() << "no case named " << GetParam();
}

INSTANTIATE_TEST_SUITE_P(Ops, GradSuite,
                         ::testing::Values("conv2d_stride1", "conv2d_stride2", "conv2d_1x1", "relu", "upsample_x2",
                                           "upsample_x4", "l2_normalize_axis0", "l2_normalize_axis1", "matmul",
                                           "softmax_cross_entropy", "binary_cross_entropy", "masked_mean_pool",
                                           "masked_sum_pool", "select_pixels", "concat_rows", "scale", "add",
                                           "reshape", "sum", "detach", "maskcontrast_total_loss"));

TEST(GradSuiteCoverage, EveryCaseIsListed) {
  EXPECT_EQ(all_grad_cases().size(), 21u);
}

TEST(GradSuiteCoverage, DetachedInputHasZeroGradient) {
  for (const GradCase& c : op_grad_cases()) {
    if (c.name != "detach") continue;
    const auto grads = analytic_grads(c.inputs, c.build);
    for (Real v : grads[1].values()) EXPECT_EQ(v, 0);
  }
}
