// SPDX-License-Identifier: Apache-2.0
//
// Writes a synthetic terrain with a carved hole: full.ply, carved.ply and
// removed.ply (the ground truth of the hole).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "terrafill/pointcloud/io.hpp"
#include "terrafill/synthetic.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace terrafill;
  CLI::App app{"Synthetic terrain generator"};
  synthetic::TerrainOptions opt;
  std::string out = ".";
  app.add_option("--output-dir,-o", out, "Output directory")->capture_default_str();
  app.add_option("--grid", opt.grid, "Samples per side")->capture_default_str()->check(CLI::Range(2, 100000));
  app.add_option("--noise", opt.noise_amplitude, "Noise amplitude")->capture_default_str();
  app.add_option("--hole-fraction", opt.hole_fraction, "Fraction of points removed")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", opt.seed, "Noise and blob seed")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    const auto t = synthetic::make_terrain(opt);
    fs::create_directories(out);
    cloud::write_cloud(fs::path(out) / "full.ply", t.full);
    cloud::write_cloud(fs::path(out) / "carved.ply", t.carved);
    cloud::write_cloud(fs::path(out) / "removed.ply", t.removed);
    std::fprintf(stderr, "wrote %zu points (%zu carved out) to %s\n", t.full.size(), t.removed.size(), out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "terrafill-synth: %s\n", e.what());
    return 3;
  }
  return 0;
}
