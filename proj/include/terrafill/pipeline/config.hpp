// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "terrafill/bspline/fit.hpp"
#include "terrafill/heightfield/projection.hpp"
#include "terrafill/heightfield/raster.hpp"
#include "terrafill/inpaint/config.hpp"
#include "terrafill/pointcloud/io.hpp"
#include "terrafill/reconstruct/halton.hpp"

namespace terrafill::pipeline {

enum class LowFrequency { kBSpline, kPlane };

inline const char* to_string(LowFrequency l) { return l == LowFrequency::kPlane ? "plane" : "bspline"; }

inline LowFrequency parse_low_frequency(const std::string& s) {
  if (s == "bspline") return LowFrequency::kBSpline;
  if (s == "plane") return LowFrequency::kPlane;
  throw InvalidParameter("low-frequency model must be 'bspline' or 'plane', got '" + s + "'");
}

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = ".";
  bool dump_intermediates = false;
  cloud::CloudFormat output_format = cloud::CloudFormat::kPly;
  std::uint64_t seed = 42;

  double voxel_ratio = 0.05;
  bspline::FitConfig fit;
  LowFrequency low_frequency = LowFrequency::kBSpline;

  heightfield::ProjectionConfig projection;
  std::size_t density_k = heightfield::kDefaultDensityK;
  std::size_t r_max = heightfield::kDefaultMaxResolution;

  inpaint::InpaintConfig inpaint;

  double density_factor = 1.0;
  std::size_t halton_skip = reconstruct::kDefaultHaltonSkip;

  /// Projection options shared by fitting and decomposition.
  void set_newton(const bspline::ProjectionOptions& o) {
    fit.projection = o;
    projection.newton = o;
  }

  inpaint::InpaintConfig inpaint_config() const {
    inpaint::InpaintConfig c = inpaint;
    c.rng_seed = seed;
    return c;
  }

  void validate() const {
    if (!(voxel_ratio > 0.0 && voxel_ratio <= 1.0)) throw InvalidParameter("voxel ratio must be in (0, 1]");
    fit.validate();
    if (fit.regularization_weight < 0.0 && fit.regularization_weight != -1.0) {
      throw InvalidParameter("regularization weight must be nonnegative (or -1 for the default)");
    }
    if (projection.normal_k < 3) throw InvalidParameter("normal k must be at least 3");
    if (!(projection.epsilon >= 0.0)) throw InvalidParameter("epsilon must be nonnegative");
    if (!(projection.boundary_reach >= 0.0)) throw InvalidParameter("boundary reach must be nonnegative");
    if (fit.projection.grid_u < 1 || fit.projection.grid_v < 1 || !(fit.projection.tol > 0.0) ||
        fit.projection.max_iter < 0) {
      throw InvalidParameter("invalid projection settings");
    }
    if (density_k < 1) throw InvalidParameter("density k must be at least 1");
    if (r_max < 2) throw InvalidParameter("r_max must be at least 2");
    inpaint.validate();
    if (!(density_factor >= 0.0)) throw InvalidParameter("density factor must be nonnegative");
  }

  /// Every setting as key/value text, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const {
    auto real = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string(buf);
    };
    return {
        {"input", input.string()},
        {"output_dir", output_dir.string()},
        {"dump_intermediates", dump_intermediates ? "1" : "0"},
        {"output_format", output_format == cloud::CloudFormat::kPly ? "ply" : "xyz"},
        {"seed", std::to_string(seed)},
        {"voxel_ratio", real(voxel_ratio)},
        {"low_frequency", to_string(low_frequency)},
        {"degree", std::to_string(fit.degree)},
        {"control_m", std::to_string(fit.m)},
        {"control_n", std::to_string(fit.n)},
        {"fit_iterations", std::to_string(fit.iterations)},
        {"regularization_weight", fit.regularization_weight < 0.0 ? "auto" : real(fit.regularization_weight)},
        {"seed_grid_u", std::to_string(fit.projection.grid_u)},
        {"seed_grid_v", std::to_string(fit.projection.grid_v)},
        {"newton_max_iter", std::to_string(fit.projection.max_iter)},
        {"newton_tol", real(fit.projection.tol)},
        {"normal_k", std::to_string(projection.normal_k)},
        {"epsilon", real(projection.epsilon)},
        {"boundary_reach", real(projection.boundary_reach)},
        {"density_k", std::to_string(density_k)},
        {"r_max", std::to_string(r_max)},
        {"patch_size", std::to_string(inpaint.patch_size)},
        {"patch_iterations", std::to_string(inpaint.iterations)},
        {"refresh_rounds", std::to_string(inpaint.refresh_rounds)},
        {"solver_tol", real(inpaint.solver_tol)},
        {"solver_max_iter", std::to_string(inpaint.solver_max_iter)},
        {"density_factor", real(density_factor)},
        {"halton_skip", std::to_string(halton_skip)},
    };
  }
};

}  // namespace terrafill::pipeline
