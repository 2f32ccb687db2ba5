#include <cmath>

#include "test_util.hpp"
#include "wcvs/error.hpp"
#include "wcvs/gradcheck.hpp"
#include "wcvs/tensor.hpp"

namespace wcvs {
namespace {

double entry_error(const GradCheckReport& r, const std::string& wrt) {
  for (const auto& e : r.entries)
    if (e.wrt == wrt) return e.max_rel_error;
  ADD_FAILURE() << "no entry for " << wrt;
  return 1.0;
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-10, 0.0), 1e-10 / 1e-8);
}

TEST(GradCheck, NumericGradientOfCubic) {
  const auto f = [](const std::vector<double>& x) { return x[0] * x[0] * x[0] + 2 * x[1]; };
  const auto g = numeric_gradient(f, {2.0, 5.0});
  // Central differences on a cubic are off by exactly h^2.
  EXPECT_NEAR(g[0], 12.0 + kFiniteDifferenceStep * kFiniteDifferenceStep, 1e-9);
  EXPECT_NEAR(g[1], 2.0, 1e-9);
}

class EveryDifferentiableOp : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryDifferentiableOp, MatchesFiniteDifferences) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const GradCheckReport r = grad_check(GetParam(), seed);
    ASSERT_FALSE(r.entries.empty());
    for (const auto& e : r.entries) {
      EXPECT_GT(e.coordinates, 0u);
      EXPECT_LT(e.max_rel_error, kGradTolerance) << e.op << " wrt " << e.wrt << " seed " << seed;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Ops, EveryDifferentiableOp, ::testing::ValuesIn(differentiable_ops()),
                         [](const auto& info) { return info.param; });

// The loss is linear in beta, so only rounding in the difference quotient remains.
TEST(GradCheck, AffineTermIsExact) {
  EXPECT_LT(entry_error(grad_check("spade_modulate", 3), "beta"), 1e-8);
}

TEST(GradCheck, MultiSpadeCoversEverySource) {
  const GradCheckReport r = grad_check("multi_spade", 4);
  for (const char* wrt : {"x", "label.gamma", "label.beta", "flow.gamma", "flow.beta", "guidance.gamma",
                          "guidance.beta"}) {
    EXPECT_LT(entry_error(r, wrt), kGradTolerance);
  }
}

TEST(GradCheck, PartialConvBlocksMaskedInputs) {
  Rng rng(5);
  const Tensor x = Tensor::uniform({1, 2, 6, 6}, rng, -1, 1);
  Tensor mask({1, 1, 6, 6});
  for (double& m : mask.data()) m = rng.uniform() < 0.5 ? 1.0 : 0.0;
  const ConvLayer l = ConvLayer::seeded(3, 2, 3, 1, 1, rng);
  const ConvGrads g = partial_conv2d_backward(x, mask, l, Tensor::uniform({1, 3, 6, 6}, rng, -1, 1));
  std::size_t blocked = 0;
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 6; ++y)
      for (int xx = 0; xx < 6; ++xx)
        if (mask.at(0, 0, y, xx) == 0.0) {
          EXPECT_EQ(g.dx.at(0, c, y, xx), 0.0);
          ++blocked;
        }
  EXPECT_GT(blocked, 0u);
}

TEST(GradCheck, ForwardOnlyOpsRefuse) {
  for (const auto& op : forward_only_ops()) {
    try {
      grad_check(op, 0);
      FAIL() << op;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoBackward);
    }
  }
  EXPECT_THROW(grad_check("no_such_op", 0), Error);
}

TEST(GradCheck, SuiteIsSeedDeterministic) {
  const auto a = grad_check_suite(11, 1);
  const auto b = grad_check_suite(11, 1);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].max_rel_error(), b[0].max_rel_error());
  EXPECT_TRUE(a[0].passed());
}

}  // namespace
}  // namespace wcvs
