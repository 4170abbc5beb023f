#include <gtest/gtest.h>

#include <numbers>

#include "hkvf/mobius.hpp"
#include "support.hpp"

using namespace hkvf;
using hkvf::prop::Gen;

namespace {

const double kPi = std::numbers::pi;

bool same_point(const ExtendedPoint& p, const ExtendedPoint& q, double tol = 1e-9) {
  return chordal_distance(p, q) < tol;
}

MobiusTransform f_plus(double theta) {
  return {Complex(1.0, theta), Complex(0.0, theta), Complex(0.0, -theta), Complex(1.0, -theta)};
}

}  // namespace

TEST(ExtendedPoint, InfinityEqualsOnlyItself) {
  EXPECT_EQ(ExtendedPoint::infinity(), ExtendedPoint::infinity());
  EXPECT_NE(ExtendedPoint::infinity(), ExtendedPoint(1e300));
  EXPECT_THROW(ExtendedPoint(Complex(std::nan(""), 0.0)), std::invalid_argument);
  EXPECT_THROW(ExtendedPoint(Complex(0.0, HUGE_VAL)), std::invalid_argument);
}

TEST(Mobius, ComposeTranslations) {
  const MobiusTransform f(1.0, kI, 0.0, 1.0);
  const MobiusTransform h = compose(f, f);
  EXPECT_LT(h.distance(MobiusTransform::translation(Complex(0, 2))), 1e-15);
  EXPECT_LT(compose(MobiusTransform::identity(), f).distance(f), 1e-15);
  EXPECT_TRUE(compose(f, inverse(f)).is_identity());
}

TEST(Mobius, ApplyProjective) {
  EXPECT_TRUE(MobiusTransform::translation(kI).apply(ExtendedPoint::infinity()).is_infinity());
  EXPECT_TRUE(MobiusTransform(0.0, 1.0, 1.0, 0.0).apply(0.0).is_infinity());
  const ExtendedPoint w = f_plus(1.0).apply(-1.0);
  EXPECT_TRUE(same_point(w, -1.0, 1e-15));
  const MobiusTransform g(2.0, 1.0, 1.0, 1.0);
  EXPECT_TRUE(same_point(g.apply(ExtendedPoint::infinity()), 2.0));
}

TEST(Mobius, FixedPointExamples) {
  const auto rot = fixed_points(MobiusTransform::rotation(kPi / 2));
  ASSERT_EQ(rot.size(), 2u);
  EXPECT_TRUE(same_point(rot[0], 0.0));
  EXPECT_TRUE(rot[1].is_infinity());

  const auto par = fixed_points(f_plus(1.0));
  ASSERT_EQ(par.size(), 1u);
  EXPECT_TRUE(same_point(par[0], -1.0));

  const auto hyp = fixed_points(MobiusTransform(1.0, 0.5, 0.5, 1.0));
  ASSERT_EQ(hyp.size(), 2u);
  EXPECT_TRUE(same_point(hyp[0], -1.0));
  EXPECT_TRUE(same_point(hyp[1], 1.0));

  EXPECT_THROW(fixed_points(MobiusTransform::identity()), IdentityInput);
  EXPECT_THROW(fixed_points(MobiusTransform(-1.0, 0.0, 0.0, -1.0)), IdentityInput);
}

TEST(Mobius, ClassifyExamples) {
  EXPECT_EQ(classify(MobiusTransform::identity()).kind, MobiusKind::Identity);
  EXPECT_TRUE(classify(MobiusTransform::identity()).fixed_points.empty());
  const MobiusClass e = classify(MobiusTransform::rotation(kPi / 2));
  EXPECT_EQ(e.kind, MobiusKind::Elliptic);
  EXPECT_NEAR(e.trace.real(), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(classify(f_plus(1.0)).kind, MobiusKind::Parabolic);
  const MobiusClass h = classify(MobiusTransform(1.0, 0.5, 0.5, 1.0));
  EXPECT_EQ(h.kind, MobiusKind::Hyperbolic);
  EXPECT_NEAR(h.trace.real(), 4.0 / std::sqrt(3.0), 1e-14);
  EXPECT_EQ(classify(MobiusTransform::scaling(Complex(1.0, 1.0))).kind, MobiusKind::Loxodromic);
}

TEST(Mobius, SingularMatrixRejected) {
  EXPECT_THROW(MobiusTransform(1.0, 2.0, 2.0, 4.0), SingularMatrix);
  EXPECT_THROW(MobiusTransform(0.0, 0.0, 0.0, 0.0), SingularMatrix);
}

TEST(Mobius, SignNormalization) {
  const MobiusTransform f(-2.0, -1.0, -1.0, -1.0);
  EXPECT_GE(f.trace().real(), 0.0);
  EXPECT_TRUE(f.normalized());
  EXPECT_LT(f.distance(MobiusTransform(2.0, 1.0, 1.0, 1.0)), 1e-15);
  const auto r = f.to_reals();
  EXPECT_LT(MobiusTransform::from_reals(r).distance(f), 1e-15);
}

TEST(Mobius, ThreePointExamples) {
  const ExtendedPoint inf = ExtendedPoint::infinity();
  EXPECT_TRUE(from_three_points(0.0, 1.0, inf, 0.0, 1.0, inf).is_identity());
  EXPECT_LT(from_three_points(0.0, 1.0, inf, kI, 1.0 + kI, inf).distance(MobiusTransform::translation(kI)), 1e-12);
  EXPECT_LT(from_three_points(1.0, kI, -1.0, kI, -1.0, -kI).distance(MobiusTransform::rotation(kPi / 2)), 1e-12);
  EXPECT_THROW(from_three_points(0.0, 0.0, 1.0, 0.0, 1.0, 2.0), DegenerateTriple);
  EXPECT_THROW(from_three_points(0.0, 1.0, 2.0, inf, 1.0, inf), DegenerateTriple);
}

TEST(MobiusProperty, GroupLaws) {
  Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const MobiusTransform f = gen.mobius(), g = gen.mobius(), h = gen.mobius();
    std::vector<ExtendedPoint> pts;
    for (int i = 0; i < 10; ++i) pts.emplace_back(gen.complex());
    const MobiusTransform fg = compose(f, g);
    EXPECT_TRUE(fg.normalized());
    EXPECT_LT(prop::max_chordal([&](auto z) { return fg.apply(z); },
                                   [&](auto z) { return f.apply(g.apply(z)); }, pts),
              1e-10);
    EXPECT_LT(prop::max_chordal([&](auto z) { return compose(fg, h).apply(z); },
                                   [&](auto z) { return compose(f, compose(g, h)).apply(z); }, pts),
              1e-10);
    EXPECT_LT(prop::max_chordal([&](auto z) { return inverse(fg).apply(z); },
                                   [&](auto z) { return compose(inverse(g), inverse(f)).apply(z); }, pts),
              1e-10);
  }
}

TEST(MobiusProperty, ThreePointInterpolation) {
  Gen gen(12);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<ExtendedPoint, 3> z{gen.complex(), gen.complex(), gen.complex()};
    std::array<ExtendedPoint, 3> w{gen.complex(), gen.complex(), gen.complex()};
    if (trial % 5 == 0) z[trial % 3] = ExtendedPoint::infinity();
    if (trial % 7 == 0) w[(trial + 1) % 3] = ExtendedPoint::infinity();
    const MobiusTransform f = from_three_points(z[0], z[1], z[2], w[0], w[1], w[2]);
    EXPECT_TRUE(f.normalized());
    for (int k = 0; k < 3; ++k) EXPECT_LT(chordal_distance(f.apply(z[k]), w[k]), 1e-9);
  }
}

TEST(MobiusProperty, FixedPointsAreFixed) {
  Gen gen(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const MobiusTransform f = gen.mobius();
    for (const auto& p : fixed_points(f)) EXPECT_LT(chordal_distance(f.apply(p), p), 1e-8);
  }
}

TEST(MobiusProperty, ProjectiveInvariance) {
  Gen gen(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const MobiusTransform f = gen.mobius();
    const MobiusTransform m(-f.a(), -f.b(), -f.c(), -f.d());
    const MobiusClass a = classify(f), b = classify(m);
    EXPECT_EQ(a.kind, b.kind);
    ASSERT_EQ(a.fixed_points.size(), b.fixed_points.size());
    for (std::size_t i = 0; i < a.fixed_points.size(); ++i)
      EXPECT_TRUE(same_point(a.fixed_points[i], b.fixed_points[i], 1e-12));
  }
}

TEST(MobiusProperty, ConjugationInvariance) {
  Gen gen(15);
  const std::array<MobiusTransform, 4> models = {MobiusTransform::rotation(0.7), MobiusTransform::translation(1.0),
                                                 MobiusTransform::scaling(3.0),
                                                 MobiusTransform::scaling(std::polar(2.0, 0.5))};
  for (int trial = 0; trial < 1000; ++trial) {
    const MobiusTransform f = trial % 2 ? gen.mobius() : models[(trial / 2) % 4];
    const MobiusTransform h = gen.mobius(1.0);
    EXPECT_EQ(classify(f.conjugated_by(h)).kind, classify(f).kind);
  }
}
