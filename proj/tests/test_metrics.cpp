#include <cmath>

#include "test_util.hpp"
#include "wcvs/error.hpp"
#include "wcvs/metrics.hpp"

namespace wcvs {
namespace {

// Lab via the CIE epsilon/kappa form, written separately from the library.
Lab lab_oracle(double r, double g, double b) {
  auto lin = [](double c) { return c > 0.04045 ? std::pow((c + 0.055) / 1.055, 2.4) : c / 12.92; };
  const double R = lin(r), G = lin(g), B = lin(b);
  const double X = (0.4124564 * R + 0.3575761 * G + 0.1804375 * B) / 0.95047;
  const double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  const double Z = (0.0193339 * R + 0.1191920 * G + 0.9503041 * B) / 1.08883;
  const double eps = 216.0 / 24389.0, kappa = 24389.0 / 27.0;
  auto f = [&](double t) { return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0; };
  return {116.0 * f(Y) - 16.0, 500.0 * (f(X) - f(Y)), 200.0 * (f(Y) - f(Z))};
}

void expect_lab_near(const Lab& a, const Lab& b, double tol) {
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], tol) << "channel " << c;
}

TEST(Lab, Anchors) {
  expect_lab_near(rgb_to_lab({1, 1, 1}), {100, 0, 0}, 1e-4);
  expect_lab_near(rgb_to_lab({0, 0, 0}), {0, 0, 0}, 1e-12);
  // Published sRGB red under D65.
  expect_lab_near(rgb_to_lab({1, 0, 0}), {53.2408, 80.0925, 67.2032}, 1e-3);
}

TEST(Lab, MatchesOracle) {
  for (double r : {0.0, 0.01, 0.2, 0.5, 0.93})
    for (double g : {0.0, 0.03, 0.4, 1.0})
      for (double b : {0.0, 0.04, 0.6, 1.0}) expect_lab_near(rgb_to_lab({r, g, b}), lab_oracle(r, g, b), 1e-9);
}

TEST(Lab, RoundTripGrid) {
  double worst = 0.0;
  for (int i = 0; i <= 16; ++i)
    for (int j = 0; j <= 16; ++j)
      for (int k = 0; k <= 16; ++k) {
        const std::array<double, 3> rgb{i / 16.0, j / 16.0, k / 16.0};
        const auto back = lab_to_rgb(rgb_to_lab(rgb));
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(back[c] - rgb[c]));
      }
  EXPECT_LT(worst, 1e-6);
}

TEST(Lab, OutOfRange) {
  try {
    rgb_to_lab({1.2, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
  EXPECT_THROW(rgb_to_lab({0, NAN, 0}), Error);
}

TEST(FbConsistency, ConstantOffset) {
  Frame a(5, 7, 3, 0.4), b(5, 7, 3, 0.4 + 10.0 / 255.0);
  const ConsistencyReport r = fb_consistency(a, b);
  EXPECT_NEAR(r.delta_rgb, 10.0, 1e-9);
  EXPECT_EQ(r.pixel_count, 35u);
  EXPECT_GT(r.delta_lab, 0.0);
  const ConsistencyReport s = fb_consistency(b, a);
  EXPECT_EQ(r.delta_rgb, s.delta_rgb);
  EXPECT_EQ(r.delta_lab, s.delta_lab);
  EXPECT_EQ(fb_consistency(a, a).delta_lab, 0.0);
}

TEST(FbConsistency, MaskRestrictsPixels) {
  Frame a(4, 4, 3, 0.5), b = a;
  b.at(0, 0, 0) = 1.0;
  Mask m(4, 4, 1);
  m.at(0, 0) = 0;
  const ConsistencyReport r = fb_consistency(a, b, m);
  EXPECT_EQ(r.delta_rgb, 0.0);
  EXPECT_EQ(r.pixel_count, 15u);
  EXPECT_EQ(fb_consistency(a, b, Mask(4, 4)).pixel_count, 0u);
  EXPECT_THROW(fb_consistency(a, Frame(4, 5, 3)), Error);
}

TEST(ShortTerm, ConstantAndShift) {
  const std::vector<Frame> still(4, Frame(6, 6, 3, 0.25));
  EXPECT_EQ(short_term_consistency(still, std::vector<FlowField>(4, FlowField(6, 6))), 0.0);

  Rng rng(3);
  Frame base(6, 12, 3);
  for (double& v : base.data()) v = rng.uniform();
  std::vector<Frame> frames;
  for (int t = 0; t < 3; ++t) {
    Frame f(6, 8, 3);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 3; ++c) f.at(y, x, c) = base.at(y, x + 2 * t, c);
    frames.push_back(f);
  }
  // frame t at x shows frame t-1 at x + 2.
  std::vector<FlowField> flows(3, FlowField::constant(6, 8, 2.0, 0.0));
  EXPECT_EQ(short_term_consistency(frames, flows), 0.0);
}

TEST(ShortTerm, LengthMismatch) {
  const std::vector<Frame> frames(3, Frame(4, 4, 3));
  try {
    short_term_consistency(frames, std::vector<FlowField>(2, FlowField(4, 4)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  EXPECT_THROW(short_term_consistency({frames}, {}), Error);
}

TEST(ReverseTrajectory, Palindrome) {
  std::vector<Camera> cams;
  for (int i = 0; i < 3; ++i) cams.push_back(test::camera_at(Point3(0.1 * i, 0, 0), Point3(0, 0, 5)));
  const auto rt = reverse_trajectory(cams);
  ASSERT_EQ(rt.size(), 5u);
  for (std::size_t k = 0; k < rt.size(); ++k) EXPECT_EQ(rt[k], rt[rt.size() - 1 - k]);
  EXPECT_EQ(rt.front(), cams.front());
  EXPECT_EQ(reverse_trajectory({cams[0]}).size(), 1u);
  try {
    reverse_trajectory({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Empty);
  }
}

TEST(Tables, ContainRows) {
  const std::string t = format_fb_table({{"ours", {1.5, 2.25, 10}}});
  EXPECT_NE(t.find("ours"), std::string::npos);
  EXPECT_NE(t.find("2.2500"), std::string::npos);
  EXPECT_NE(format_short_term_table({{"gt", 0.125}}).find("0.125000"), std::string::npos);
}

}  // namespace
}  // namespace wcvs
