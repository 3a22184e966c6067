// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "terrafill/error.hpp"

namespace terrafill::inpaint {

struct InpaintConfig {
  int patch_size = 11;
  int iterations = 10;
  std::uint64_t rng_seed = 0;
  double solver_tol = 1e-10;  // relative residual target
  int solver_max_iter = 20;   // refinement sweeps after the direct solve
  /// Patch-match/aggregate passes that refresh the working hole gradients
  /// before the final pass.
  int refresh_rounds = 2;

  void validate() const {
    if (patch_size < 3 || patch_size % 2 == 0) throw InvalidParameter("patch size must be odd and at least 3");
    if (iterations < 0) throw InvalidParameter("patch-match iterations must be nonnegative");
    if (!(solver_tol > 0.0)) throw InvalidParameter("solver tolerance must be positive");
    if (solver_max_iter < 0) throw InvalidParameter("solver iteration limit must be nonnegative");
    if (refresh_rounds < 0) throw InvalidParameter("refresh rounds must be nonnegative");
  }
};

}  // namespace terrafill::inpaint
