// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "terrafill/pipeline/pipeline.hpp"
#include "terrafill/synthetic.hpp"

using namespace terrafill;
using cloud::PointCloud;
using pipeline::PipelineConfig;
namespace fs = std::filesystem;

namespace {

const synthetic::Terrain& small_terrain() {
  static const synthetic::Terrain t = [] {
    synthetic::TerrainOptions opt;
    opt.grid = 120;
    return synthetic::make_terrain(opt);
  }();
  return t;
}

PipelineConfig config_for(const fs::path& input, const fs::path& out) {
  PipelineConfig cfg;
  cfg.input = input;
  cfg.output_dir = out;
  return cfg;
}

fs::path write_input(const std::string& name, const PointCloud& c) {
  const auto dir = oracle::scratch_dir(name);
  cloud::write_cloud(dir / "input.ply", c);
  return dir / "input.ply";
}

const pipeline::Log kQuiet{false};

/// Mean distance to the k-th nearest neighbor (in xy) over the points of
/// `probe`, measured within `c`.
double mean_knn_spacing(const PointCloud& c, const std::vector<std::size_t>& probe, std::size_t k) {
  PointCloud flat;
  for (const auto& p : c.points) flat.points.emplace_back(p.x(), p.y(), 0.0);
  const auto index = cloud::build_index(flat);
  double sum = 0.0;
  for (std::size_t i : probe) sum += std::sqrt(index.knn(cloud::to_coord(flat.points[i]), k + 1).back().distance2);
  return sum / double(probe.size());
}

}  // namespace

TEST(Pipeline, CarvedTerrainCountAccounting) {
  const auto& t = small_terrain();
  const auto input = write_input("pipe_count", t.carved);
  auto cfg = config_for(input, input.parent_path() / "out");
  const auto report = pipeline::run_pipeline(cfg, kQuiet);
  EXPECT_EQ(report.status, "ok");
  const auto merged = cloud::read_cloud(pipeline::cloud_path(cfg, pipeline::artifacts::kMergedStem));
  const std::size_t target = std::stoul(report.get("fill_target"));
  EXPECT_GT(target, 0u);
  EXPECT_EQ(merged.size(), t.carved.size() + target);
  EXPECT_EQ(std::stoul(report.get("new_points")), target);
  EXPECT_TRUE(fs::exists(cfg.output_dir / pipeline::artifacts::kReport));
}

TEST(Pipeline, FilledHoleMatchesSurroundingDensity) {
  const auto& t = small_terrain();
  const auto input = write_input("pipe_density", t.carved);
  auto cfg = config_for(input, input.parent_path() / "out");
  cfg.dump_intermediates = true;
  const auto report = pipeline::run_pipeline(cfg, kQuiet);
  const auto merged = cloud::read_cloud(pipeline::cloud_path(cfg, pipeline::artifacts::kMergedStem));
  const auto fresh = cloud::read_cloud(pipeline::cloud_path(cfg, pipeline::artifacts::kNewPointsStem));
  EXPECT_NEAR(double(fresh.size()), std::stod(report.get("fill_target")), 1.0);

  // Hole: generated points; ring: original points within a band around the
  // removed blob.
  PointCloud removed_flat;
  for (const auto& p : t.removed.points) removed_flat.points.emplace_back(p.x(), p.y(), 0.0);
  const auto removed_index = cloud::build_index(removed_flat);
  std::vector<std::size_t> hole, ring;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (i >= t.carved.size()) {
      hole.push_back(i);
      continue;
    }
    const auto& p = merged.points[i];
    const double d = std::sqrt(removed_index.nearest({p.x(), p.y(), 0.0}).distance2);
    if (d > 0.05 && d < 0.15) ring.push_back(i);
  }
  ASSERT_FALSE(hole.empty());
  ASSERT_FALSE(ring.empty());
  const double in_hole = mean_knn_spacing(merged, hole, 8);
  const double around = mean_knn_spacing(merged, ring, 8);
  RecordProperty("spacing_ratio", std::to_string(in_hole / around));
  EXPECT_NEAR(in_hole / around, 1.0, 0.25);
}

TEST(Pipeline, DeterministicAcrossRuns) {
  const auto& t = small_terrain();
  const auto input = write_input("pipe_det", t.carved);
  auto a = config_for(input, input.parent_path() / "a");
  auto b = config_for(input, input.parent_path() / "b");
  pipeline::run_pipeline(a, kQuiet);
  pipeline::run_pipeline(b, kQuiet);
  EXPECT_EQ(read_file(pipeline::cloud_path(a, pipeline::artifacts::kMergedStem)),
            read_file(pipeline::cloud_path(b, pipeline::artifacts::kMergedStem)));
}

TEST(Pipeline, StagedThroughFilesEqualsMonolithic) {
  const auto& t = small_terrain();
  const auto input = write_input("pipe_staged", t.carved);
  auto mono = config_for(input, input.parent_path() / "mono");
  mono.dump_intermediates = true;
  pipeline::run_pipeline(mono, kQuiet);

  auto cfg = config_for(input, input.parent_path() / "staged");
  fs::create_directories(cfg.output_dir);
  const auto& dir = cfg.output_dir;
  namespace art = pipeline::artifacts;
  pipeline::RunReport rep;
  const auto original = pipeline::strip_normals(cloud::read_cloud(input));
  cloud::write_cloud(dir / art::kDownsampled, pipeline::stage_downsample(original, cfg, rep));
  const auto down = cloud::read_cloud(dir / art::kDownsampled);
  bspline::write_surface(dir / art::kSurface, pipeline::stage_fit(down, original, cfg, rep));
  const auto surface = bspline::read_surface(dir / art::kSurface);
  heightfield::write_height_field(dir / art::kHeightBefore,
                                  pipeline::stage_decompose(original, surface, cfg, rep).field);
  const auto before = heightfield::read_height_field(dir / art::kHeightBefore);
  heightfield::write_height_field(dir / art::kHeightAfter, pipeline::stage_inpaint(before, cfg, rep).field);
  const auto after = heightfield::read_height_field(dir / art::kHeightAfter);
  pipeline::write_reconstruction(pipeline::stage_reconstruct(original, surface, before, after, cfg, rep), cfg, true);

  for (const char* name : {art::kDownsampled, art::kSurface, art::kHeightBefore, art::kHeightAfter, "merged.ply",
                           "new_points.ply"}) {
    EXPECT_EQ(read_file(mono.output_dir / name), read_file(dir / name)) << name;
  }
}

TEST(Pipeline, HoleFreeInputAddsNothing) {
  PointCloud c;
  const int n = 80;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = i / double(n - 1), y = j / double(n - 1);
      c.points.emplace_back(x, y, 0.2 * std::sin(3 * x) * std::cos(2 * y));
    }
  const auto input = write_input("pipe_full", c);
  auto cfg = config_for(input, input.parent_path() / "out");
  const auto report = pipeline::run_pipeline(cfg, kQuiet);
  EXPECT_EQ(report.get("hole_cells"), "0");
  EXPECT_EQ(report.get("new_points"), "0");
  EXPECT_EQ(cloud::read_cloud(pipeline::cloud_path(cfg, pipeline::artifacts::kMergedStem)).size(), c.size());
}

TEST(Pipeline, UnreadableInputFailsInReadStage) {
  const auto dir = oracle::scratch_dir("pipe_missing");
  auto cfg = config_for(dir / "does_not_exist.ply", dir / "out");
  try {
    pipeline::run_pipeline(cfg, kQuiet);
    FAIL() << "expected a stage error";
  } catch (const pipeline::StageError& e) {
    EXPECT_EQ(e.stage(), "read");
    EXPECT_NE(std::string(e.what()).find("read"), std::string::npos);
  }
  const auto report = read_file(cfg.output_dir / pipeline::artifacts::kReport);
  EXPECT_NE(report.find("status=failed\n"), std::string::npos);
  EXPECT_NE(report.find("failed_stage=read\n"), std::string::npos);
}

TEST(Pipeline, ReportEchoesEveryConfigValue) {
  const auto& t = small_terrain();
  const auto input = write_input("pipe_report", t.carved);
  auto cfg = config_for(input, input.parent_path() / "out");
  cfg.inpaint.patch_size = 9;
  pipeline::run_pipeline(cfg, kQuiet);
  const auto text = read_file(cfg.output_dir / pipeline::artifacts::kReport);
  for (const auto& [k, v] : cfg.entries()) EXPECT_NE(text.find("config." + k + "=" + v + "\n"), std::string::npos) << k;
  for (const char* stage : {"read", "downsample", "fit", "decompose", "inpaint", "reconstruct", "write", "total"})
    EXPECT_NE(text.find(std::string("time.") + stage + "="), std::string::npos) << stage;
  for (const char* key : {"fit_objectives", "projection_valid", "hole_cells", "inpaint_residual", "merged_points"})
    EXPECT_NE(text.find(std::string(key) + "="), std::string::npos) << key;
}

TEST(Pipeline, InvalidConfigIsReported) {
  const auto dir = oracle::scratch_dir("pipe_badcfg");
  auto cfg = config_for(dir / "x.ply", dir / "out");
  cfg.inpaint.patch_size = 4;
  EXPECT_THROW(pipeline::run_pipeline(cfg, kQuiet), pipeline::StageError);
  EXPECT_NE(read_file(cfg.output_dir / pipeline::artifacts::kReport).find("failed_stage=config"), std::string::npos);
}
