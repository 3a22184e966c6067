// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#pragma once

#include "terrafill/bspline/basis.hpp"
#include "terrafill/bspline/fit.hpp"
#include "terrafill/bspline/footprint.hpp"
#include "terrafill/bspline/io.hpp"
#include "terrafill/bspline/projection.hpp"
#include "terrafill/bspline/surface.hpp"
#include "terrafill/error.hpp"
#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/heightfield/projection.hpp"
#include "terrafill/heightfield/raster.hpp"
#include "terrafill/inpaint/config.hpp"
#include "terrafill/inpaint/gradients.hpp"
#include "terrafill/inpaint/inpaint.hpp"
#include "terrafill/inpaint/patch_match.hpp"
#include "terrafill/inpaint/poisson.hpp"
#include "terrafill/metrics/metrics.hpp"
#include "terrafill/pipeline/config.hpp"
#include "terrafill/pipeline/pipeline.hpp"
#include "terrafill/pointcloud/downsample.hpp"
#include "terrafill/pointcloud/io.hpp"
#include "terrafill/pointcloud/kd_index.hpp"
#include "terrafill/pointcloud/normals.hpp"
#include "terrafill/pointcloud/obb.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"
#include "terrafill/reconstruct/fill.hpp"
#include "terrafill/reconstruct/halton.hpp"
#include "terrafill/synthetic.hpp"
#include "terrafill/types.hpp"
