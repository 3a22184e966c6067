// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "terrafill/bspline/fit.hpp"
#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/heightfield/projection.hpp"
#include "terrafill/heightfield/raster.hpp"

using namespace terrafill;
using bspline::BSplineSurface;
using cloud::PointCloud;
using heightfield::HeightField;
using heightfield::SignedProjection;

namespace {

BSplineSurface flat_surface() {
  std::vector<Point3> ctrl;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) ctrl.emplace_back(i / 3.0, j / 3.0, 0.0);
  return BSplineSurface::clamped_uniform(3, 3, 3, ctrl);
}

BSplineSurface wavy_surface() {
  std::vector<Point3> ctrl;
  for (int i = 0; i <= 7; ++i)
    for (int j = 0; j <= 7; ++j) {
      const double x = i / 7.0, y = j / 7.0;
      ctrl.emplace_back(x, y, 0.1 * std::sin(3.0 * x + 1.0) * std::cos(2.5 * y));
    }
  return BSplineSurface::clamped_uniform(7, 7, 3, ctrl);
}

SignedProjection at(double u, double v, double d) {
  SignedProjection p;
  p.param = {u, v};
  p.signed_distance = d;
  return p;
}

/// Brute-force density: per point, sorted distances to all others, median of
/// the first k, averaged.
double density_oracle(const std::vector<ParamPoint>& pts, std::size_t k) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) d.push_back(std::hypot(pts[i].u - pts[j].u, pts[i].v - pts[j].v));
    std::sort(d.begin(), d.end());
    total += k % 2 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
  }
  return total / double(pts.size());
}

}  // namespace

// ---------------------------------------------------------------- projection

TEST(ProjectCloud, PlaneSignsFollowSurfaceNormal) {
  PointCloud c;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) c.points.emplace_back(0.025 + i * 0.05, 0.025 + j * 0.05, 0.0);
  c.points.emplace_back(0.4, 0.6, 2.0);
  c.points.emplace_back(0.7, 0.3, -3.0);
  const auto rep = heightfield::project_cloud(c, flat_surface());
  ASSERT_EQ(rep.projections.size(), c.size());
  EXPECT_NEAR(rep.projections[400].signed_distance, 2.0, 1e-9);
  EXPECT_NEAR(rep.projections[401].signed_distance, -3.0, 1e-9);
  for (std::size_t i = 0; i < 400; ++i) {
    EXPECT_TRUE(rep.projections[i].valid);
    EXPECT_GE(rep.projections[i].signed_distance, 0.0);
    EXPECT_LE(std::abs(rep.projections[i].signed_distance), 1e-12);
    EXPECT_EQ(rep.projections[i].source_index, i);
  }
  EXPECT_EQ(rep.valid, c.size());
}

TEST(ProjectCloud, RecoversConstructedOffsets) {
  const auto s = wavy_surface();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.03, 0.97), T(-0.01, 0.01);
  PointCloud c;
  std::vector<double> t;
  for (int k = 0; k < 1000; ++k) {
    const ParamPoint p{U(rng), U(rng)};
    const auto d = s.derivatives(p, 1);
    const Vector3 n = d.su.cross(d.sv).normalized();
    t.push_back(T(rng));
    c.points.push_back(s.evaluate(p) + t.back() * n);
  }
  const auto rep = heightfield::project_cloud(c, s);
  std::size_t valid = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto& pr = rep.projections[k];
    if (!pr.valid) continue;
    ++valid;
    EXPECT_NEAR(pr.signed_distance, t[k], 1e-4) << k;
  }
  EXPECT_GE(valid, 990u);
}

TEST(ProjectCloud, OneSidedCloudHasOneSign) {
  const auto s = wavy_surface();
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> U(0.03, 0.97), T(0.001, 0.02);
  PointCloud c;
  for (int k = 0; k < 600; ++k) {
    const ParamPoint p{U(rng), U(rng)};
    const auto d = s.derivatives(p, 1);
    c.points.push_back(s.evaluate(p) + T(rng) * d.su.cross(d.sv).normalized());
  }
  const auto rep = heightfield::project_cloud(c, s);
  for (const auto& p : rep.projections)
    if (p.valid) {
      EXPECT_GT(p.signed_distance, 0.0);
    }
}

TEST(ProjectCloud, DistancesBoundedByFitReport) {
  PointCloud c;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const double x = i / 49.0, y = j / 49.0;
      c.points.emplace_back(x, y, 0.2 * std::sin(3 * x) * std::cos(2 * y) + 0.01 * std::sin(40 * x + 30 * y));
    }
  bspline::FitConfig cfg;
  cfg.m = cfg.n = 9;
  const auto fit = bspline::fit_surface(c, cfg);
  const double worst = *std::max_element(fit.distances.begin(), fit.distances.end());
  const auto rep = heightfield::project_cloud(c, fit.surface);
  for (const auto& p : rep.projections) {
    EXPECT_LE(std::abs(p.signed_distance), worst + 1e-9);
  }
}

TEST(ProjectCloud, RejectsEmptyAndBadEpsilon) {
  EXPECT_THROW(heightfield::project_cloud(PointCloud{}, flat_surface()), EmptyCloud);
  PointCloud c;
  c.points.emplace_back(0.5, 0.5, 0.1);
  heightfield::ProjectionConfig cfg;
  cfg.epsilon = -1.0;
  EXPECT_THROW(heightfield::project_cloud(c, flat_surface(), cfg), InvalidParameter);
}

// ---------------------------------------------------------------- density

TEST(Density, RegularGridInteriorMedian) {
  const double h = 0.05;
  std::vector<ParamPoint> pts;
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j) pts.push_back({i * h, j * h});
  // Interior point: 4 neighbors at h, 4 at h*sqrt(2); k=8 median is their mean.
  EXPECT_NEAR(density_oracle(pts, 8), heightfield::estimate_density(pts, 8), 1e-12);
  std::vector<double> d;
  const ParamPoint q{7 * h, 7 * h};
  for (const auto& p : pts)
    if (p.u != q.u || p.v != q.v) d.push_back(std::hypot(p.u - q.u, p.v - q.v));
  std::sort(d.begin(), d.end());
  EXPECT_NEAR(0.5 * (d[3] + d[4]), (h + h * std::sqrt(2.0)) / 2, 1e-12);
}

TEST(Density, MatchesBruteForceOnRandomPoints) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<ParamPoint> pts;
  for (int k = 0; k < 400; ++k) pts.push_back({U(rng), U(rng)});
  for (std::size_t k : {1u, 4u, 7u, 8u}) {
    EXPECT_NEAR(heightfield::estimate_density(pts, k), density_oracle(pts, k), 1e-12);
  }
}

TEST(Density, TwoPointsAndPreconditions) {
  const std::vector<ParamPoint> two{{0.1, 0.2}, {0.4, 0.6}};
  EXPECT_NEAR(heightfield::estimate_density(two, 1), 0.5, 1e-15);
  EXPECT_THROW(heightfield::estimate_density(two, 2), InvalidParameter);
  EXPECT_THROW(heightfield::estimate_density(two, 0), InvalidParameter);
}

TEST(Density, UniformRandomSanityBand) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<ParamPoint> pts;
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n; ++k) pts.push_back({U(rng), U(rng)});
  // Poisson process: E[r_j] = Gamma(j + 1/2) / (Gamma(j) sqrt(pi n)); k=8
  // median is the mean of the 4th and 5th neighbor distances.
  const double scale = std::sqrt(M_PI * double(n));
  const double r4 = std::tgamma(4.5) / std::tgamma(4.0) / scale;
  const double r5 = std::tgamma(5.5) / std::tgamma(5.0) / scale;
  const double expected = 0.5 * (r4 + r5);
  EXPECT_NEAR(heightfield::estimate_density(pts, 8), expected, 0.2 * expected);
}

// ---------------------------------------------------------------- resolution

TEST(Resolution, RoundingAndClamps) {
  EXPECT_EQ(heightfield::choose_resolution(0.01), 100u);
  EXPECT_EQ(heightfield::choose_resolution(0.6), 2u);
  EXPECT_EQ(heightfield::choose_resolution(1e-6), 4096u);
  EXPECT_EQ(heightfield::choose_resolution(1e-6, 512), 512u);
  EXPECT_THROW(heightfield::choose_resolution(0.0), InvalidParameter);
  EXPECT_THROW(heightfield::choose_resolution(-0.1), InvalidParameter);
}

// ---------------------------------------------------------------- rasterize

TEST(Rasterize, ExtremumRuleCases) {
  const std::vector<SignedProjection> proj{at(0.1, 0.1, 2), at(0.2, 0.2, 1), at(0.15, 0.05, -3),
                                           at(0.6, 0.1, -1), at(0.7, 0.2, -2), at(0.9, 0.05, 5)};
  const auto h = heightfield::rasterize(proj, 2);
  EXPECT_EQ(h.at(0, 0), 2.0);
  EXPECT_EQ(h.at(1, 0), -2.0);
  EXPECT_TRUE(h.is_hole(0, 1));
  EXPECT_TRUE(h.is_hole(1, 1));
  EXPECT_EQ(h.counts[h.index(0, 0)], 3u);
  EXPECT_EQ(h.counts[h.index(0, 1)], 0u);
}

TEST(Rasterize, ZeroIsNonPositiveAndTiesTakeMax) {
  const auto a = heightfield::rasterize({at(0.1, 0.1, 0.0), at(0.1, 0.1, 0.0), at(0.1, 0.1, 1.0)}, 2);
  EXPECT_EQ(a.at(0, 0), 0.0);
  const auto b = heightfield::rasterize({at(0.1, 0.1, 0.0), at(0.1, 0.1, 1.0)}, 2);
  EXPECT_EQ(b.at(0, 0), 1.0);
}

TEST(Rasterize, RightEdgeAndInvalidSkipped) {
  auto bad = at(0.1, 0.1, 7.0);
  bad.valid = false;
  const auto h = heightfield::rasterize({at(1.0, 1.0, 0.5), at(0.0, 1.0, 0.25), bad}, 4);
  EXPECT_EQ(h.at(3, 3), 0.5);
  EXPECT_EQ(h.at(0, 3), 0.25);
  EXPECT_TRUE(h.is_hole(0, 0));
  EXPECT_THROW(heightfield::rasterize({}, 1), InvalidParameter);
}

TEST(Rasterize, PartitionAndPermutationInvariance) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> U(0.0, 1.0), D(-1.0, 1.0);
  std::vector<SignedProjection> proj;
  for (int k = 0; k < 3000; ++k) {
    proj.push_back(at(U(rng), U(rng), D(rng)));
    if (k % 10 == 0) proj.back().valid = false;
  }
  const auto ref = heightfield::rasterize(proj, 37);
  std::size_t sum = 0, valid = 0;
  for (auto c : ref.counts) sum += c;
  for (const auto& p : proj) valid += p.valid;
  EXPECT_EQ(sum, valid);
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    EXPECT_EQ(ref.is_hole(i), ref.counts[i] == 0);
  }
  for (int s = 0; s < 50; ++s) {
    std::shuffle(proj.begin(), proj.end(), rng);
    EXPECT_TRUE(heightfield::rasterize(proj, 37) == ref);
  }
}

TEST(Rasterize, DenseNearRegularCloudHasFewHoles) {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> J(0.4, 0.6);
  std::vector<SignedProjection> proj;
  std::vector<ParamPoint> params;
  const int n = 150;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const ParamPoint p{(i + J(rng)) / n, (j + J(rng)) / n};
      params.push_back(p);
      proj.push_back(at(p.u, p.v, 0.0));
    }
  const double rho = heightfield::estimate_density(params, 8);
  const auto h = heightfield::rasterize(proj, heightfield::choose_resolution(rho), rho);
  EXPECT_LT(double(h.hole_count()) / double(h.values.size()), 0.02);
}

// ---------------------------------------------------------------- file format

TEST(HeightFieldIo, RoundTripWithHolesAndCounts) {
  HeightField h(5, 0.2);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    if (i % 4 == 1) continue;
    h.values[i] = U(rng);
    h.counts[i] = std::uint32_t(1 + i % 3);
  }
  heightfield::quantize(h);
  const auto dir = oracle::scratch_dir("hf_io");
  heightfield::write_height_field(dir / "a.hf", h);
  EXPECT_TRUE(heightfield::read_height_field(dir / "a.hf") == h);

  const std::string bytes = heightfield::encode(h);
  EXPECT_EQ(bytes.substr(0, 4), "HF01");
  EXPECT_EQ(bytes.size(), 4u + 4 + 8 + 25 * 4 + 4 + 25 * 4);
}

TEST(HeightFieldIo, WithoutCountsBlock) {
  HeightField h(2, 0.5);
  h.values = {1.0, std::nan(""), 2.0, 3.0};
  h.counts = {1, 0, 1, 1};
  std::string bytes = heightfield::encode(h);
  bytes.resize(4 + 4 + 8 + 16);
  EXPECT_TRUE(heightfield::decode(bytes) == h);
}

TEST(HeightFieldIo, RejectsBadInput) {
  EXPECT_THROW(heightfield::decode("PLY1xxxxxxxx"), ParseError);
  HeightField h(3, 0.1);
  std::string bytes = heightfield::encode(h);
  EXPECT_THROW(heightfield::decode(bytes.substr(0, 20)), ParseError);
  EXPECT_THROW(heightfield::decode(bytes + "x"), ParseError);
  EXPECT_THROW(heightfield::read_height_field(oracle::scratch_dir("hf_missing") / "none.hf"), IoError);
}

TEST(HeightFieldIo, PgmPreview) {
  HeightField h(2, 0.5);
  h.values = {0.0, std::nan(""), 1.0, 0.5};
  const std::string pgm = heightfield::encode_pgm(h);
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 4);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  // Top row of the image is y = 1.
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 0]), 255);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 1]), 128);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 2]), 1);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 3]), 0);
}
