#include <gtest/gtest.h>

#include <cmath>

#include "hkvf/collar.hpp"
#include "support.hpp"

using namespace hkvf;

namespace {

ClassificationResult classify(SurfaceKind k, const char* lambda, const VectorField& X) {
  return classify_flow(ConformalMetric(CanonicalSurface::make(k), lambda), X);
}

}  // namespace

TEST(Collar, FlatHalfPlane) {
  const ConformalMetric g(CanonicalSurface::make(SurfaceKind::HalfPlaneClosed), "1");
  const CollarChart c = collar_extend(g, VectorField::translational(), 0.0, 1.0);
  EXPECT_LT(c.conformality_residual, 1e-5);
  EXPECT_LT(c.orthogonality, 1e-8);
  for (const auto& [t, f] : c.f_table) EXPECT_NEAR(f, t, 1e-8);
  // Sigma(x, y) = y + i x: the collar swaps the labels of the flat coordinates
  for (const CollarSample& s : c.samples) {
    EXPECT_LT(std::abs(s.point - Complex(s.y, s.x)), 1e-8);
    EXPECT_NEAR(s.mu, 1.0, 1e-12);
  }
  EXPECT_GT(c.strip, 0.0);
  bool extended = false;
  for (const CollarSample& s : c.samples) extended |= s.y < 0.0;
  EXPECT_TRUE(extended);
}

TEST(Collar, FlatClosedAnnulus) {
  const ConformalMetric g(CanonicalSurface::with_rho(SurfaceKind::ClosedAnnulus, 0.3), "1");
  const CollarChart c = collar_extend(g, VectorField::rotational(), 1.0, 0.4);
  EXPECT_LT(c.conformality_residual, 1e-5);
  EXPECT_LT(c.orthogonality, 1e-8);
  for (const auto& [t, f] : c.f_table) EXPECT_NEAR(f, -std::log(1.0 - t), 1e-8) << t;
  for (double t : {0.05, 0.2, 0.35}) {
    EXPECT_LT(std::abs(c.gamma(t) - Complex(1.0 - t, 0.0)), 1e-8);
    EXPECT_NEAR(c.f_inv(c.f(t)), t, 1e-10);
  }
  for (const CollarSample& s : c.samples) EXPECT_NEAR(s.mu, (1 - s.t) * (1 - s.t), 1e-8);
}

TEST(Collar, NonFlatChannel) {
  const ConformalMetric g(CanonicalSurface::make(SurfaceKind::ChannelClosed), "2+cos(x)");
  const CollarChart c = collar_extend(g, VectorField::translational(), Complex(kTwoPi, 0.5), 0.5);
  EXPECT_LT(c.conformality_residual, 1e-5);
  EXPECT_LT(c.orthogonality, 1e-8);
}

TEST(Collar, GeodesicEscape) {
  const ConformalMetric g(CanonicalSurface::with_rho(SurfaceKind::ClosedAnnulus, 0.5), "1");
  EXPECT_THROW(collar_extend(g, VectorField::rotational(), 1.0, 0.6), GeodesicEscape);
}

TEST(Collar, RejectsInteriorPoint) {
  const ConformalMetric g(CanonicalSurface::make(SurfaceKind::ClosedDisc), "1");
  EXPECT_THROW(collar_extend(g, VectorField::rotational(), 0.5, 0.1), NotOnBoundary);
}

TEST(AnnulusAlpha, Constraint) {
  const auto a = annulus_alpha_constraint(0.5);
  EXPECT_EQ(a[0], 0.0);
  EXPECT_NEAR(a[1], 0.8, 1e-12);
  EXPECT_LT(annulus_alpha_constraint(1e-9)[1], 1e-8);
  EXPECT_THROW(annulus_alpha_constraint(1.0), InvalidSurface);
}

TEST(AnnulusAlpha, OnlyZeroPreservesBothCircles) {
  const AlphaCheck zero = annulus_alpha_check(0.5, 0.0);
  EXPECT_TRUE(zero.accepted());
  const AlphaCheck other = annulus_alpha_check(0.5, 0.8);
  EXPECT_TRUE(other.outer);
  EXPECT_FALSE(other.inner);
  EXPECT_FALSE(other.accepted());
}

TEST(Cut, PlaneRotationCircle) {
  const ClassificationResult r = classify(SurfaceKind::Plane, "1", VectorField::rotational());
  const CutResult c = cut_boundary_case(r.source, r, CutSpec{{CutCurve{CutCurve::Type::Circle, 3.0}}});
  EXPECT_EQ(c.surface.kind(), SurfaceKind::ClosedDisc);
  EXPECT_LT(std::abs(c.normalization.apply(Complex(3.0, 0.0)) - 1.0), 1e-12);
}

TEST(Cut, PuncturedPlaneTwoCircles) {
  const ClassificationResult r = classify(SurfaceKind::PuncturedPlane, "1/r", VectorField::rotational());
  const CutResult c = cut_boundary_case(
      r.source, r, CutSpec{{CutCurve{CutCurve::Type::Circle, 1.0}, CutCurve{CutCurve::Type::Circle, 0.5}}});
  EXPECT_EQ(c.surface.kind(), SurfaceKind::ClosedAnnulus);
  EXPECT_NEAR(c.surface.rho(), 0.5, 1e-12);
}

TEST(Cut, CylinderHasNoCut) {
  const ClassificationResult r = classify(SurfaceKind::Cylinder, "1", VectorField::translational());
  EXPECT_THROW(cut_boundary_case(r.source, r, CutSpec{{CutCurve{CutCurve::Type::HorizontalLine, 1.0}}}),
               InvalidCut);
}

TEST(Cut, PlaneTranslationStrips) {
  const ClassificationResult r = classify(SurfaceKind::Plane, "1", VectorField::translational());
  const CutResult strip = cut_boundary_case(
      r.source, r, CutSpec{{CutCurve{CutCurve::Type::VerticalLine, 1.0}, CutCurve{CutCurve::Type::VerticalLine, 3.0}}});
  EXPECT_EQ(strip.surface.kind(), SurfaceKind::ChannelClosed);
  EXPECT_LT(std::abs(strip.normalization.apply(Complex(1.0, 0.0))), 1e-12);
  EXPECT_LT(std::abs(strip.normalization.apply(Complex(3.0, 0.0)) - kTwoPi), 1e-12);
  const CutResult half =
      cut_boundary_case(r.source, r, CutSpec{{CutCurve{CutCurve::Type::VerticalLine, 1.0}}, CutKeep::Below});
  EXPECT_EQ(half.surface.kind(), SurfaceKind::HalfPlaneClosed);
  EXPECT_LT(std::abs(half.normalization.apply(Complex(1.0, 0.0))), 1e-12);
  EXPECT_THROW(cut_boundary_case(r.source, r, CutSpec{{CutCurve{CutCurve::Type::HorizontalLine, 1.0}}}),
               InvalidCut);
}

TEST(CollarProperty, AnnulusProfileAcrossBasePoints) {
  hkvf::prop::Gen gen(91);
  const ConformalMetric g(CanonicalSurface::with_rho(SurfaceKind::ClosedAnnulus, 0.3), "1");
  for (int i = 0; i < 5; ++i) {
    const Complex p = std::polar(1.0, gen.uniform(-3.0, 3.0));
    const CollarChart c = collar_extend(g, VectorField::rotational(), p, 0.3);
    EXPECT_LT(c.conformality_residual, 1e-5);
    EXPECT_LT(c.orthogonality, 1e-8);
    for (const auto& [t, f] : c.f_table) EXPECT_NEAR(f, -std::log(1.0 - t), 1e-8);
  }
}
