// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <random>
#include <set>

#include "oracles.hpp"
#include "terrafill/file_io.hpp"
#include "terrafill/pointcloud/downsample.hpp"
#include "terrafill/pointcloud/io.hpp"
#include "terrafill/pointcloud/kd_index.hpp"
#include "terrafill/pointcloud/normals.hpp"
#include "terrafill/pointcloud/obb.hpp"

using namespace terrafill;
using cloud::PointCloud;

namespace {

PointCloud grid_plane(std::size_t n, double z = 0.0) {
  PointCloud c;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(double(i) / n, double(j) / n, z);
  return c;
}

PointCloud fibonacci_sphere(std::size_t n) {
  PointCloud c;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (double(i) + 0.5) / double(n);
    const double r = std::sqrt(1.0 - y * y);
    const double th = golden * double(i);
    c.points.emplace_back(r * std::cos(th), y, r * std::sin(th));
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------- IO

TEST(CloudIo, XyzTwoPoints) {
  const auto dir = oracle::scratch_dir("xyz2");
  write_file(dir / "a.xyz", "0 0 0\n1 2 3");
  const auto c = cloud::read_cloud(dir / "a.xyz");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[0], Point3(0, 0, 0));
  EXPECT_EQ(c.points[1], Point3(1, 2, 3));
  EXPECT_FALSE(c.has_normals());
}

TEST(CloudIo, XyzCommentsAndNormals) {
  const auto dir = oracle::scratch_dir("xyzn");
  write_file(dir / "a.xyz", "# header\n1 2 3 0 0 1  # trailing\n\n4 5 6 0 1 0\n");
  const auto c = cloud::read_cloud(dir / "a.xyz");
  ASSERT_EQ(c.size(), 2u);
  ASSERT_TRUE(c.has_normals());
  EXPECT_EQ((*c.normals)[1], Vector3(0, 1, 0));
}

TEST(CloudIo, XyzArityErrorReportsLine) {
  const auto dir = oracle::scratch_dir("xyzbad");
  write_file(dir / "a.xyz", "1 2\n");
  try {
    cloud::read_cloud(dir / "a.xyz");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  write_file(dir / "b.xyz", "1 2 3\n4 5 x\n");
  try {
    cloud::read_cloud(dir / "b.xyz");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(CloudIo, MissingFileIsIoError) {
  EXPECT_THROW(cloud::read_cloud("/nonexistent/terrafill/none.ply"), IoError);
}

TEST(CloudIo, AsciiPlyHeaderOrder) {
  const auto dir = oracle::scratch_dir("plyascii");
  write_file(dir / "a.ply",
             "ply\nformat ascii 1.0\ncomment hi\nelement vertex 3\nproperty float x\nproperty float y\n"
             "property float z\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n"
             "1 2 3\n4 5 6\n7 8 9\n");
  const auto c = cloud::read_cloud(dir / "a.ply");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.points[0], Point3(1, 2, 3));
  EXPECT_EQ(c.points[2], Point3(7, 8, 9));
}

TEST(CloudIo, TruncatedBinaryPlyIsParseError) {
  const auto dir = oracle::scratch_dir("plytrunc");
  write_file(dir / "a.ply",
             "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\nproperty double y\n"
             "property double z\nend_header\n0123456789");
  EXPECT_THROW(cloud::read_cloud(dir / "a.ply"), ParseError);
}

TEST(CloudIo, BinaryPlyRoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  auto c = oracle::random_cloud(500, rng, 1e3);
  std::vector<Vector3> n;
  for (std::size_t i = 0; i < c.size(); ++i) n.push_back(Vector3(rng() % 7 + 1.0, 1.0, -2.0).normalized());
  c.normals = n;
  const auto dir = oracle::scratch_dir("plybin");
  cloud::write_cloud(dir / "a.ply", c);
  EXPECT_EQ(cloud::read_cloud(dir / "a.ply"), c);
}

TEST(CloudIo, AsciiRoundTripsWithinTolerance) {
  std::mt19937_64 rng(2);
  const auto c = oracle::random_cloud(300, rng);
  const auto dir = oracle::scratch_dir("asciirt");
  cloud::WriteOptions ply{cloud::CloudFormat::kPly, false, nullptr};
  cloud::WriteOptions xyz{cloud::CloudFormat::kXyz, false, nullptr};
  cloud::write_cloud(dir / "a.ply", c, ply);
  cloud::write_cloud(dir / "a.xyz", c, xyz);
  for (const auto& path : {dir / "a.ply", dir / "a.xyz"}) {
    const auto back = cloud::read_cloud(path);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LE((back.points[i] - c.points[i]).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(CloudIo, GeneratedFlagRoundTrip) {
  PointCloud c(std::vector<Point3>{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}});
  const std::vector<std::uint8_t> gen{0, 1, 1};
  const auto dir = oracle::scratch_dir("gen");
  cloud::WriteOptions opt;
  opt.generated = &gen;
  cloud::write_cloud(dir / "a.ply", c, opt);
  const auto f = cloud::read_cloud_file(dir / "a.ply", cloud::CloudFormat::kPly);
  ASSERT_TRUE(f.generated.has_value());
  EXPECT_EQ(*f.generated, gen);
  EXPECT_EQ(f.cloud, c);
}

// ---------------------------------------------------------------- KdIndex

TEST(KdIndex, MatchesBruteForceIncludingTies) {
  std::mt19937_64 rng(3);
  auto c = oracle::random_cloud(1500, rng);
  // Integer lattice points force many exact distance ties.
  for (int i = 0; i < 500; ++i) c.points.emplace_back(double(rng() % 5), double(rng() % 5), double(rng() % 5));
  const auto index = cloud::build_index(c);
  std::uniform_real_distribution<double> U(-1.0, 5.0);
  for (int q = 0; q < 200; ++q) {
    const Point3 p = q % 2 ? Point3(U(rng), U(rng), U(rng)) : c.points[rng() % c.size()];
    const std::size_t k = 1 + rng() % 20;
    const auto got = index.knn(cloud::to_coord(p), k);
    const auto want = oracle::knn(c.points, p, k);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].index, want[i].second);
      EXPECT_EQ(got[i].distance2, want[i].first);
    }
  }
}

TEST(KdIndex, ReturnsMinKN) {
  PointCloud c(std::vector<Point3>{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}});
  const auto index = cloud::build_index(c);
  const auto nb = index.knn({0, 0, 0}, 10);
  ASSERT_EQ(nb.size(), 3u);
  EXPECT_EQ(nb[0].index, 0u);
  EXPECT_EQ(nb[1].index, 1u);
  EXPECT_EQ(nb[2].index, 2u);
}

// ---------------------------------------------------------------- downsample

TEST(Downsample, TwoPointsOneVoxel) {
  // The far point sets the scale so the first two share a voxel.
  PointCloud c(std::vector<Point3>{{0, 0, 0}, {0.1, 0, 0}, {10, 0, 0}});
  const auto d = cloud::voxel_downsample(c, 0.05);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR((d.points[0] - Point3(0.05, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_EQ(d.points[1], Point3(10, 0, 0));
}

TEST(Downsample, DistinctVoxelsAreIdentity) {
  const auto c = grid_plane(10);
  const auto d = cloud::voxel_downsample(c, 0.05);
  ASSERT_EQ(d.size(), c.size());
  std::set<std::array<double, 3>> a, b;
  for (const auto& p : c.points) a.insert({p.x(), p.y(), p.z()});
  for (const auto& p : d.points) b.insert({p.x(), p.y(), p.z()});
  EXPECT_EQ(a, b);
}

TEST(Downsample, CountMatchesBucketingOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = oracle::random_cloud(trial == 0 ? 1000 : 200 + rng() % 2000, rng);
    const double ratio = trial == 0 ? 0.05 : 0.02 + 0.1 * double(rng() % 100) / 100.0;
    // Independent bucketing: edge from the OBB, origin at the axis-aligned minimum.
    const double edge = ratio * 2.0 * cloud::compute_obb(c).longest_half_extent();
    Point3 lo = c.points[0], hi = c.points[0];
    for (const auto& p : c.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    std::map<std::array<long, 3>, std::pair<Point3, int>> buckets;
    for (const auto& p : c.points) {
      std::array<long, 3> key{};
      for (int d = 0; d < 3; ++d) {
        const long cells = std::max(1L, long(std::ceil((hi[d] - lo[d]) / edge)));
        key[d] = std::min(cells - 1, long(std::floor((p[d] - lo[d]) / edge)));
      }
      auto& b = buckets.try_emplace(key, Point3::Zero(), 0).first->second;
      b.first += p;
      ++b.second;
    }
    const auto d = cloud::voxel_downsample(c, ratio);
    ASSERT_EQ(d.size(), buckets.size());
    std::set<std::array<double, 3>> got;
    for (const auto& p : d.points) got.insert({p.x(), p.y(), p.z()});
    for (const auto& [k, b] : buckets) {
      const Point3 m = b.first / b.second;
      auto it = got.lower_bound({m.x() - 1e-12, -1e300, -1e300});
      bool found = false;
      for (; it != got.end() && (*it)[0] <= m.x() + 1e-12; ++it)
        found |= std::abs((*it)[1] - m.y()) < 1e-12 && std::abs((*it)[2] - m.z()) < 1e-12;
      EXPECT_TRUE(found);
    }
  }
}

TEST(Downsample, RejectsBadRatio) {
  const auto c = grid_plane(3);
  EXPECT_THROW(cloud::voxel_downsample(c, 0.0), InvalidParameter);
  EXPECT_THROW(cloud::voxel_downsample(c, 1.5), InvalidParameter);
  EXPECT_THROW(cloud::voxel_downsample(PointCloud{}, 0.5), EmptyCloud);
}

// ---------------------------------------------------------------- normals

TEST(Normals, PlaneGivesAxisNormal) {
  const auto est = cloud::estimate_normals(grid_plane(20), 16);
  EXPECT_TRUE(est.degenerate.empty());
  for (const auto& n : *est.cloud.normals) EXPECT_GE(std::abs(n.dot(Vector3::UnitZ())), 1.0 - 1e-9);
}

TEST(Normals, SphereNormalsAreRadial) {
  const auto c = fibonacci_sphere(2000);
  const auto est = cloud::estimate_normals(c, 10);
  const double cos5 = std::cos(5.0 * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_GE(std::abs((*est.cloud.normals)[i].dot(c.points[i].normalized())), cos5);
}

TEST(Normals, CollinearNeighbourhoodIsFlagged) {
  PointCloud c(std::vector<Point3>{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}});
  const auto est = cloud::estimate_normals(c, 3);
  EXPECT_EQ(est.degenerate.size(), 4u);
  for (const auto& n : *est.cloud.normals) {
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
    EXPECT_NEAR(n.dot(Vector3(1, 1, 1).normalized()), 0.0, 1e-12);
  }
  // Three points cannot supply three neighbours each.
  EXPECT_THROW(cloud::estimate_normals(PointCloud(std::vector<Point3>(c.points.begin(), c.points.begin() + 3)), 3),
               InvalidParameter);
}

TEST(Orientation, PlaneWithRandomSigns) {
  auto c = grid_plane(15, 2.0);
  std::mt19937_64 rng(5);
  std::vector<Vector3> n;
  for (std::size_t i = 0; i < c.size(); ++i) n.push_back(rng() % 2 ? Vector3::UnitZ() : Vector3(-Vector3::UnitZ()));
  c.normals = n;
  const auto out = cloud::orient_normals(c);
  for (const auto& v : *out.normals) EXPECT_EQ(v, Vector3::UnitZ());
}

TEST(Orientation, SeparatePatchesEachConsistent) {
  PointCloud c = grid_plane(8);
  for (const auto& p : grid_plane(8).points) c.points.push_back(p + Point3(100, 0, 0));
  std::mt19937_64 rng(6);
  std::vector<Vector3> n;
  for (std::size_t i = 0; i < c.size(); ++i) n.push_back(rng() % 2 ? Vector3::UnitZ() : Vector3(-Vector3::UnitZ()));
  c.normals = n;
  const auto rep = cloud::orient_normals_report(c, 8);
  EXPECT_EQ(rep.components, 2u);
  for (std::size_t half = 0; half < 2; ++half) {
    const Vector3 first = (*rep.cloud.normals)[half * 64];
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ((*rep.cloud.normals)[half * 64 + i], first);
  }
}

TEST(Orientation, SphereFlipCountMatchesBfsOracle) {
  const auto c = fibonacci_sphere(1500);
  auto est = cloud::estimate_normals(c, 10).cloud;
  std::mt19937_64 rng(7);
  for (auto& v : *est.normals)
    if (rng() % 2) v = -v;
  const auto rep = cloud::orient_normals_report(est, 10);

  // Reference: breadth-first sign propagation over the symmetric k-NN graph
  // from the highest point along the smallest-variance axis.
  const std::size_t n = c.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [d, j] : oracle::knn(c.points, c.points[i], 11)) {
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  Point3 mean = Point3::Zero();
  for (const auto& p : c.points) mean += p;
  mean /= double(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : c.points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Vector3 up = es.eigenvectors().col(0);
  Eigen::Index big;
  up.cwiseAbs().maxCoeff(&big);
  if (up[big] < 0) up = -up;
  std::size_t seed = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (c.points[i].dot(up) > c.points[seed].dot(up)) seed = i;
  std::vector<Vector3> ref = *est.normals;
  if (ref[seed].dot(up) < 0) ref[seed] = -ref[seed];
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> q;
  q.push(seed);
  seen[seed] = 1;
  while (!q.empty()) {
    const auto a = q.front();
    q.pop();
    for (auto b : adj[a]) {
      if (seen[b]) continue;
      seen[b] = 1;
      if (ref[b].dot(ref[a]) < 0) ref[b] = -ref[b];
      q.push(b);
    }
  }
  std::size_t flips = 0;
  for (std::size_t i = 0; i < n; ++i) flips += ref[i].dot((*est.normals)[i]) < 0 ? 1 : 0;
  EXPECT_EQ(rep.flips, flips);
  for (std::size_t i = 0; i < n; ++i) EXPECT_GT((*rep.cloud.normals)[i].dot(c.points[i]), 0.0);
}

TEST(Orientation, Idempotent) {
  const auto c = fibonacci_sphere(800);
  const auto once = cloud::orient_normals(cloud::estimate_normals(c, 12).cloud, 12);
  const auto twice = cloud::orient_normals(once, 12);
  EXPECT_EQ(once, twice);
}

// ---------------------------------------------------------------- OBB

TEST(Obb, UnitCubeCorners) {
  PointCloud c;
  for (int i = 0; i < 8; ++i) c.points.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  const auto box = cloud::compute_obb(c);
  for (int d = 0; d < 3; ++d) EXPECT_NEAR(box.half_extents[d], 0.5, 1e-12);
  EXPECT_NEAR((box.center - Point3(0.5, 0.5, 0.5)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(box.volume(), 1.0, 1e-12);
}

TEST(Obb, SegmentIsDegenerate) {
  PointCloud c;
  for (int i = 0; i <= 10; ++i) c.points.emplace_back(0.2 * i, 0, 0);
  const auto box = cloud::compute_obb(c);
  EXPECT_NEAR(box.longest_half_extent(), 1.0, 1e-12);
  EXPECT_EQ(box.longest_axis(), 0u);
  EXPECT_NEAR(box.half_extents[1], 0.0, 1e-12);
  EXPECT_NEAR(box.half_extents[2], 0.0, 1e-12);
}

TEST(Obb, RotatedBoxRecoversExtents) {
  const Eigen::Vector3d ext(3.0, 1.5, 0.4);
  const Eigen::Matrix3d R = Eigen::Quaterniond(Eigen::Vector4d(0.3, -0.5, 0.7, 0.2).normalized()).toRotationMatrix();
  const Point3 center(5, -2, 1);
  // A lattice symmetric in the box frame has a covariance diagonal in it.
  PointCloud c;
  for (int i = -5; i <= 5; ++i)
    for (int j = -5; j <= 5; ++j)
      for (int k = -5; k <= 5; ++k)
        c.points.push_back(center + R * Eigen::Vector3d(i / 5.0, j / 5.0, k / 5.0).cwiseProduct(ext));
  const auto box = cloud::compute_obb(c);
  for (int d = 0; d < 3; ++d) {
    EXPECT_NEAR(box.half_extents[d], ext[d], 1e-6);
    EXPECT_NEAR(std::abs(box.axes[std::size_t(d)].dot(R.col(d))), 1.0, 1e-9);
  }
  EXPECT_NEAR((box.center - center).norm(), 0.0, 1e-6);
}
