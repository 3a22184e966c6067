// SPDX-License-Identifier: Apache-2.0
//
// terrafill command line: the full pipeline and each stage on its own.
// Exit codes: 0 success, 2 usage error, 3 stage failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>

#include "terrafill/terrafill.hpp"

namespace fs = std::filesystem;
using namespace terrafill;
using pipeline::PipelineConfig;
using pipeline::RunReport;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitStage = 3;

struct Paths {
  std::string input;
  std::string domain;
  std::string surface;
  std::string before;
  std::string after;
  std::string reference;
};

struct Options {
  PipelineConfig cfg;
  Paths paths;
  std::string output_dir = ".";
  std::string format = "ply";
  std::string low_frequency = "bspline";
  double lambda = -1.0;
  bool quiet = false;
};

void add_options(CLI::App& app, Options& o) {
  auto& c = o.cfg;
  app.add_option("--input,-i", o.paths.input, "Input file (cloud, or height field for 'inpaint')");
  app.add_option("--output-dir,-o", o.output_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_flag("--dump-intermediates", c.dump_intermediates, "Write every intermediate artifact ('run')");
  app.add_option("--format", o.format, "Point cloud output format")
      ->check(CLI::IsMember({"ply", "xyz"}))
      ->capture_default_str();
  app.add_flag("--quiet,-q", o.quiet, "No progress output");

  app.add_option("--domain", o.paths.domain, "Cloud whose footprint defines the surface domain ('fit')");
  app.add_option("--surface", o.paths.surface, "Surface file");
  app.add_option("--before", o.paths.before, "Height field with holes");
  app.add_option("--after", o.paths.after, "Inpainted height field");
  app.add_option("--reference", o.paths.reference, "Ground-truth cloud ('metrics')");

  app.add_option("--voxel-ratio", c.voxel_ratio, "Voxel edge over longest bounding-box axis")->capture_default_str();
  app.add_option("--low-frequency", o.low_frequency, "Low-frequency model")
      ->check(CLI::IsMember({"bspline", "plane"}))
      ->capture_default_str();
  app.add_option("--degree", c.fit.degree, "Spline degree")->capture_default_str();
  app.add_option("--control-m", c.fit.m, "Control points along u, minus one")->capture_default_str();
  app.add_option("--control-n", c.fit.n, "Control points along v, minus one")->capture_default_str();
  app.add_option("--fit-iterations", c.fit.iterations, "Fit/correct rounds")->capture_default_str();
  app.add_option("--lambda", o.lambda, "Smoothness weight; negative selects the automatic default")
      ->capture_default_str();
  app.add_option("--seed-grid", c.fit.projection.grid_u, "Projection seed grid size per axis")->capture_default_str();
  app.add_option("--newton-iterations", c.fit.projection.max_iter, "Newton iteration limit")->capture_default_str();
  app.add_option("--newton-tol", c.fit.projection.tol, "Newton parameter step tolerance")->capture_default_str();
  app.add_option("--normal-k", c.projection.normal_k, "Neighbours for normal estimation")->capture_default_str();
  app.add_option("--epsilon", c.projection.epsilon, "Projection validity threshold")->capture_default_str();
  app.add_option("--boundary-reach", c.projection.boundary_reach,
                 "Largest offset along the surface for points beyond its edge, over the net diagonal")
      ->capture_default_str();
  app.add_option("--density-k", c.density_k, "Neighbours for density estimation")->capture_default_str();
  app.add_option("--r-max", c.r_max, "Largest height map resolution")->capture_default_str();
  app.add_option("--patch-size", c.inpaint.patch_size, "Patch edge length (odd)")->capture_default_str();
  app.add_option("--patch-iterations", c.inpaint.iterations, "Patch-match iterations")->capture_default_str();
  app.add_option("--refresh-rounds", c.inpaint.refresh_rounds, "Guidance refresh passes before the final one")
      ->capture_default_str();
  app.add_option("--solver-tol", c.inpaint.solver_tol, "Relative Poisson residual target")->capture_default_str();
  app.add_option("--density-factor", c.density_factor, "New-point density relative to the input")
      ->capture_default_str();
  app.add_option("--halton-skip", c.halton_skip, "Leading Halton indices to skip")->capture_default_str();
}

/// Copies parsed strings into the config and validates it.
void finalize(Options& o) {
  auto& c = o.cfg;
  c.input = o.paths.input;
  c.output_dir = o.output_dir;
  c.output_format = o.format == "xyz" ? cloud::CloudFormat::kXyz : cloud::CloudFormat::kPly;
  c.low_frequency = pipeline::parse_low_frequency(o.low_frequency);
  c.fit.regularization_weight = o.lambda < 0.0 ? -1.0 : o.lambda;
  c.fit.projection.grid_v = c.fit.projection.grid_u;
  c.set_newton(c.fit.projection);
  c.validate();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw CLI::RequiredError(flag);
}

cloud::PointCloud read_points(const std::string& path) { return pipeline::strip_normals(cloud::read_cloud(path)); }

/// Runs one stage body under the stage report, writing the report either way.
int run_stage(const std::string& name, const Options& o, const pipeline::Log& log,
              const std::function<void(RunReport&)>& body) {
  RunReport report;
  report.config = o.cfg.entries();
  fs::create_directories(o.cfg.output_dir);
  const fs::path report_path = o.cfg.output_dir / ("report_" + name + ".txt");
  try {
    pipeline::timed(report, name, [&] { body(report); });
  } catch (const pipeline::StageError& e) {
    report.status = "failed";
    report.failed_stage = e.stage();
    report.error = e.what();
    report.write(report_path);
    std::fprintf(stderr, "terrafill: %s\n", e.what());
    return kExitStage;
  }
  report.write(report_path);
  log("%s finished", name.c_str());
  return 0;
}

int cmd_run(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  try {
    const auto report = pipeline::run_pipeline(o.cfg, log);
    log("wrote %s new points to %s", report.get("new_points").c_str(), o.cfg.output_dir.string().c_str());
  } catch (const pipeline::StageError& e) {
    std::fprintf(stderr, "terrafill: %s\n", e.what());
    return kExitStage;
  }
  return 0;
}

int cmd_downsample(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  return run_stage("downsample", o, log, [&](RunReport& report) {
    const auto input = read_points(o.paths.input);
    const auto down = pipeline::stage_downsample(input, o.cfg, report);
    cloud::write_cloud(o.cfg.output_dir / pipeline::artifacts::kDownsampled, down);
  });
}

int cmd_fit(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  return run_stage("fit", o, log, [&](RunReport& report) {
    const auto input = read_points(o.paths.input);
    const auto domain = o.paths.domain.empty() ? input : read_points(o.paths.domain);
    const auto s = pipeline::stage_fit(input, domain, o.cfg, report);
    bspline::write_surface(o.cfg.output_dir / pipeline::artifacts::kSurface, s);
  });
}

int cmd_decompose(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  require(o.paths.surface, "--surface");
  return run_stage("decompose", o, log, [&](RunReport& report) {
    const auto input = read_points(o.paths.input);
    const auto s = bspline::read_surface(o.paths.surface);
    const auto dec = pipeline::stage_decompose(input, s, o.cfg, report);
    pipeline::write_height_artifacts(dec.field, o.cfg.output_dir, pipeline::artifacts::kHeightBefore,
                                     pipeline::artifacts::kHeightBeforePgm);
  });
}

int cmd_inpaint(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  return run_stage("inpaint", o, log, [&](RunReport& report) {
    const auto before = heightfield::read_height_field(o.paths.input);
    const auto res = pipeline::stage_inpaint(before, o.cfg, report);
    pipeline::write_height_artifacts(res.field, o.cfg.output_dir, pipeline::artifacts::kHeightAfter,
                                     pipeline::artifacts::kHeightAfterPgm);
    inpaint::write_nnf(o.cfg.output_dir / pipeline::artifacts::kNnf, res.nnf);
  });
}

int cmd_reconstruct(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  require(o.paths.surface, "--surface");
  require(o.paths.before, "--before");
  require(o.paths.after, "--after");
  return run_stage("reconstruct", o, log, [&](RunReport& report) {
    const auto input = read_points(o.paths.input);
    const auto s = bspline::read_surface(o.paths.surface);
    const auto before = heightfield::read_height_field(o.paths.before);
    const auto after = heightfield::read_height_field(o.paths.after);
    const auto rec = pipeline::stage_reconstruct(input, s, before, after, o.cfg, report);
    pipeline::write_reconstruction(rec, o.cfg, true);
  });
}

int cmd_metrics(const Options& o, const pipeline::Log& log) {
  require(o.paths.input, "--input");
  require(o.paths.reference, "--reference");
  if (o.paths.before.empty() != o.paths.after.empty()) {
    throw CLI::ValidationError("--before/--after", "height-field RMSE needs both files");
  }
  return run_stage("metrics", o, log, [&](RunReport& report) {
    const auto result = read_points(o.paths.input);
    const auto truth = read_points(o.paths.reference);
    metrics::MetricReport m;
    metrics::GpsnrOptions gopt;
    gopt.normal_k = o.cfg.projection.normal_k;
    m.gpsnr = metrics::gpsnr(truth, result, gopt);
    m.nshd = metrics::nshd(truth, result);
    if (!o.paths.surface.empty()) {
      m.nrmse = metrics::nrmse_fit(result, bspline::read_surface(o.paths.surface), o.cfg.fit.projection);
    }
    if (!o.paths.before.empty()) {
      m.rmse = metrics::rmse(heightfield::read_height_field(o.paths.before),
                             heightfield::read_height_field(o.paths.after));
    }
    m.error_map = metrics::error_map(result, truth);
    const auto& dir = o.cfg.output_dir;
    write_file(dir / pipeline::artifacts::kMetrics, metrics::format_key_values(m));
    write_file(dir / pipeline::artifacts::kMetricsCsv, metrics::format_csv(m));
    write_file(dir / pipeline::artifacts::kErrorMap, metrics::format_error_map(result, m.error_map));
    report.set("gpsnr_db", m.gpsnr.saturated ? std::string("saturated") : metrics::format_number(m.gpsnr.db));
    report.set("nshd", m.nshd.value);
    if (!o.quiet) std::fputs(metrics::format_key_values(m).c_str(), stdout);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrain point cloud hole filling"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  Options o;
  add_options(app, o);

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&, const pipeline::Log&);
  };
  const Command commands[] = {
      {"run", "Full pipeline: downsample, fit, decompose, inpaint, reconstruct", cmd_run},
      {"downsample", "Voxel-grid downsampling of --input", cmd_downsample},
      {"fit", "Fit the low-frequency surface to --input over the footprint of --domain", cmd_fit},
      {"decompose", "Project --input onto --surface and rasterize the height map", cmd_decompose},
      {"inpaint", "Fill the holes of the height field --input", cmd_inpaint},
      {"reconstruct", "Generate points for the holes of --before using --after and --surface", cmd_reconstruct},
      {"metrics", "Compare --input against --reference", cmd_metrics},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
    finalize(o);
    const pipeline::Log log{!o.quiet};
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) return c.fn(o, log);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const InvalidParameter& e) {
    std::fprintf(stderr, "terrafill: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "terrafill: %s\n", e.what());
    return kExitStage;
  }
  return kExitUsage;
}
