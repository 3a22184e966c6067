// SPDX-License-Identifier: Apache-2.0
//
// Stage functions and the end-to-end driver. Every stage hands its result on
// in exactly the precision its file format stores, so chaining stages through
// files reproduces an in-memory run bit for bit.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "terrafill/bspline/fit.hpp"
#include "terrafill/bspline/io.hpp"
#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/heightfield/projection.hpp"
#include "terrafill/heightfield/raster.hpp"
#include "terrafill/inpaint/inpaint.hpp"
#include "terrafill/metrics/metrics.hpp"
#include "terrafill/pipeline/config.hpp"
#include "terrafill/pointcloud/downsample.hpp"
#include "terrafill/pointcloud/io.hpp"
#include "terrafill/reconstruct/fill.hpp"

namespace terrafill::pipeline {

/// Fixed artifact names inside the output directory.
namespace artifacts {
inline constexpr const char* kDownsampled = "downsampled.ply";
inline constexpr const char* kSurface = "surface.bspline";
inline constexpr const char* kHeightBefore = "heightmap_before.hf";
inline constexpr const char* kHeightBeforePgm = "heightmap_before.pgm";
inline constexpr const char* kHeightAfter = "heightmap_after.hf";
inline constexpr const char* kHeightAfterPgm = "heightmap_after.pgm";
inline constexpr const char* kNnf = "nnf.txt";
inline constexpr const char* kNewPointsStem = "new_points";
inline constexpr const char* kMergedStem = "merged";
inline constexpr const char* kReport = "report.txt";
inline constexpr const char* kMetrics = "metrics.txt";
inline constexpr const char* kMetricsCsv = "metrics.csv";
inline constexpr const char* kErrorMap = "error_map.txt";
}  // namespace artifacts

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunReport {
  std::string status = "ok";
  std::string failed_stage;
  std::string error;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<std::pair<std::string, std::string>> config;

  void set(const std::string& key, const std::string& value) {
    for (auto& kv : values) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    values.emplace_back(key, value);
  }
  void set(const std::string& key, double v) { set(key, metrics::format_number(v)); }
  void set(const std::string& key, std::size_t v) { set(key, std::to_string(v)); }

  std::string get(const std::string& key) const {
    for (const auto& kv : values) {
      if (kv.first == key) return kv.second;
    }
    return {};
  }

  std::string format() const {
    std::string out = "status=" + status + "\n";
    if (!failed_stage.empty()) out += "failed_stage=" + failed_stage + "\n";
    if (!error.empty()) out += "error=" + error + "\n";
    for (const auto& [k, v] : config) out += "config." + k + "=" + v + "\n";
    for (const auto& [k, v] : stage_seconds) out += "time." + k + "=" + metrics::format_number(v) + "\n";
    for (const auto& [k, v] : values) out += k + "=" + v + "\n";
    return out;
  }

  void write(const std::filesystem::path& path) const { write_file(path, format()); }
};

/// Console progress lines on standard error.
struct Log {
  bool enabled = true;
  template <typename... Args>
  void operator()(const char* fmt, Args... args) const {
    if (!enabled) return;
    std::fprintf(stderr, "[terrafill] ");
    if constexpr (sizeof...(Args) == 0) {
      std::fputs(fmt, stderr);
    } else {
      std::fprintf(stderr, fmt, args...);
    }
    std::fputc('\n', stderr);
  }
};

/// Runs `fn`, records its wall time, and rethrows any failure as StageError.
template <typename Fn>
auto timed(RunReport& report, const std::string& stage, Fn&& fn) -> decltype(fn()) {
  const auto t0 = std::chrono::steady_clock::now();
  auto record = [&] {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report.stage_seconds.emplace_back(stage, dt.count());
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto result = fn();
      record();
      return result;
    }
  } catch (const StageError&) {
    record();
    throw;
  } catch (const std::exception& e) {
    record();
    throw StageError(stage, e.what());
  }
}

inline cloud::PointCloud strip_normals(cloud::PointCloud c) {
  c.normals.reset();
  return c;
}

inline cloud::PointCloud stage_downsample(const cloud::PointCloud& input, const PipelineConfig& cfg,
                                          RunReport& report) {
  cloud::PointCloud out = cloud::voxel_downsample(input, cfg.voxel_ratio);
  report.set("downsampled_points", out.size());
  return out;
}

/// Low-frequency surface over the footprint of `domain`, fitted to `cloud`
/// and rounded to the precision of the surface file.
inline bspline::BSplineSurface stage_fit(const cloud::PointCloud& cloud, const cloud::PointCloud& domain,
                                         const PipelineConfig& cfg, RunReport& report) {
  bspline::BSplineSurface s;
  const auto frame = bspline::compute_footprint(domain);
  if (cfg.low_frequency == LowFrequency::kPlane) {
    s = bspline::plane_surface(frame);
  } else {
    const auto fit = bspline::fit_surface(cloud, cfg.fit, frame);
    report.set("fit_lambda", fit.lambda);
    report.set("fit_initial_objective", fit.initial_objective);
    std::string objs;
    for (double o : fit.objectives) objs += (objs.empty() ? "" : ",") + metrics::format_number(o);
    report.set("fit_objectives", objs);
    report.set("fit_max_distance", fit.max_distance());
    double sum = 0.0;
    for (double d : fit.distances) sum += d * d;
    const double diag = cloud::compute_obb(cloud).diagonal();
    report.set("fit_nrmse", diag > 0.0 ? std::sqrt(sum / static_cast<double>(cloud.size())) / diag : 0.0);
    s = fit.surface;
  }
  return bspline::parse_surface(bspline::format_surface(s));
}

struct Decomposition {
  heightfield::HeightField field;
  std::size_t valid = 0;
  std::size_t invalid = 0;
};

inline Decomposition stage_decompose(const cloud::PointCloud& cloud, const bspline::BSplineSurface& surface,
                                     const PipelineConfig& cfg, RunReport& report) {
  const auto proj = heightfield::project_cloud(cloud, surface, cfg.projection);
  report.set("projection_valid", proj.valid);
  report.set("projection_invalid", proj.invalid);
  report.set("projection_boundary", proj.boundary);
  report.set("projection_unconverged", proj.unconverged);
  const auto params = heightfield::valid_params(proj.projections);
  const double rho = heightfield::estimate_density(params, cfg.density_k);
  const std::size_t r = heightfield::choose_resolution(rho, cfg.r_max);
  Decomposition d{heightfield::rasterize(proj.projections, r, rho), proj.valid, proj.invalid};
  heightfield::quantize(d.field);
  std::size_t under10 = 0, occupied = 0;
  for (auto c : d.field.counts) {
    if (c == 0) continue;
    ++occupied;
    under10 += c < 10 ? 1 : 0;
  }
  report.set("density_rho", rho);
  report.set("resolution", r);
  const auto exterior = reconstruct::exterior_holes(surface, d.field, bspline::footprint_hull(cloud));
  const auto outside = static_cast<std::size_t>(std::count(exterior.begin(), exterior.end(), std::uint8_t{1}));
  report.set("hole_cells", d.field.hole_count() - outside);
  report.set("exterior_cells", outside);
  report.set("cells_under_10_projections", occupied ? static_cast<double>(under10) / occupied : 0.0);
  return d;
}

inline inpaint::InpaintResult stage_inpaint(const heightfield::HeightField& before, const PipelineConfig& cfg,
                                            RunReport& report) {
  auto res = inpaint::inpaint_report(before, cfg.inpaint_config());
  heightfield::quantize(res.field);
  report.set("inpaint_hole_cells", res.hole_cells);
  report.set("inpaint_residual", res.residual);
  report.set("inpaint_rhs_norm", res.rhs_norm);
  report.set("inpaint_nnf_entries", res.nnf.entries.size());
  if (!res.nnf.history.empty()) report.set("inpaint_nnf_total", res.nnf.history.back());
  return res;
}

struct Reconstruction {
  reconstruct::FillResult fill;
  cloud::PointCloud new_points;
  cloud::PointCloud merged;
  std::vector<std::uint8_t> generated;
};

inline Reconstruction stage_reconstruct(const cloud::PointCloud& original, const bspline::BSplineSurface& surface,
                                        const heightfield::HeightField& before,
                                        const heightfield::HeightField& after, const PipelineConfig& cfg,
                                        RunReport& report) {
  Reconstruction rec;
  rec.fill = reconstruct::fill_holes(surface, before, after, cfg.density_factor, cfg.halton_skip,
                                     reconstruct::exterior_holes(surface, before, bspline::footprint_hull(original)));
  rec.new_points = rec.fill.cloud();
  rec.merged = cloud::concatenate(strip_normals(original), rec.new_points);
  rec.generated.assign(original.size(), 0);
  rec.generated.resize(rec.merged.size(), 1);
  report.set("fill_target", rec.fill.target);
  report.set("fill_draws", rec.fill.draws);
  report.set("fill_mean_cell_count", rec.fill.mean_count);
  report.set("new_points", rec.new_points.size());
  report.set("merged_points", rec.merged.size());
  return rec;
}

inline std::filesystem::path cloud_path(const PipelineConfig& cfg, const char* stem) {
  return cfg.output_dir / (std::string(stem) + (cfg.output_format == cloud::CloudFormat::kPly ? ".ply" : ".xyz"));
}

inline void write_reconstruction(const Reconstruction& rec, const PipelineConfig& cfg, bool new_points) {
  cloud::WriteOptions opt;
  opt.format = cfg.output_format;
  if (new_points) cloud::write_cloud(cloud_path(cfg, artifacts::kNewPointsStem), rec.new_points, opt);
  opt.generated = &rec.generated;
  cloud::write_cloud(cloud_path(cfg, artifacts::kMergedStem), rec.merged, opt);
}

inline void write_height_artifacts(const heightfield::HeightField& h, const std::filesystem::path& dir,
                                   const char* hf, const char* pgm) {
  heightfield::write_height_field(dir / hf, h);
  heightfield::write_pgm(dir / pgm, h);
}

/// Full pipeline. The report is written to the output directory whether or
/// not a stage fails; failures are rethrown as StageError afterwards.
inline RunReport run_pipeline(const PipelineConfig& cfg, const Log& log = {}) {
  RunReport report;
  report.config = cfg.entries();
  std::filesystem::create_directories(cfg.output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    cfg.validate();
    const cloud::PointCloud input =
        timed(report, "read", [&] { return strip_normals(cloud::read_cloud(cfg.input)); });
    report.set("input_points", input.size());
    log("read %zu points from %s", input.size(), cfg.input.string().c_str());

    const cloud::PointCloud down = timed(report, "downsample", [&] { return stage_downsample(input, cfg, report); });
    log("downsampled to %zu points", down.size());

    const auto surface = timed(report, "fit", [&] { return stage_fit(down, input, cfg, report); });
    log("low-frequency surface: %s", to_string(cfg.low_frequency));

    const auto dec = timed(report, "decompose", [&] { return stage_decompose(input, surface, cfg, report); });
    log("height map %zux%zu, %zu hole cells, %zu invalid projections", dec.field.r, dec.field.r,
        dec.field.hole_count(), dec.invalid);

    const auto filled = timed(report, "inpaint", [&] { return stage_inpaint(dec.field, cfg, report); });
    log("inpainted, residual %.3g", filled.residual);

    const auto rec = timed(report, "reconstruct",
                           [&] { return stage_reconstruct(input, surface, dec.field, filled.field, cfg, report); });
    log("generated %zu new points", rec.new_points.size());

    timed(report, "write", [&] {
      write_reconstruction(rec, cfg, cfg.dump_intermediates);
      if (cfg.dump_intermediates) {
        cloud::write_cloud(cfg.output_dir / artifacts::kDownsampled, down);
        bspline::write_surface(cfg.output_dir / artifacts::kSurface, surface);
        write_height_artifacts(dec.field, cfg.output_dir, artifacts::kHeightBefore, artifacts::kHeightBeforePgm);
        write_height_artifacts(filled.field, cfg.output_dir, artifacts::kHeightAfter, artifacts::kHeightAfterPgm);
        inpaint::write_nnf(cfg.output_dir / artifacts::kNnf, filled.nnf);
      }
    });
  } catch (const std::exception& e) {
    report.status = "failed";
    const auto* se = dynamic_cast<const StageError*>(&e);
    report.failed_stage = se ? se->stage() : "config";
    report.error = e.what();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report.stage_seconds.emplace_back("total", dt.count());
    report.write(cfg.output_dir / artifacts::kReport);
    if (se) throw;
    throw StageError("config", e.what());
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  report.stage_seconds.emplace_back("total", dt.count());
  report.write(cfg.output_dir / artifacts::kReport);
  return report;
}

}  // namespace terrafill::pipeline
