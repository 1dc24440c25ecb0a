#pragma once

// Cross-modality point cloud registration: feature-correlation filtering for
// a coarse pose, then local key-region point-to-plane optimization fused
// into a global transform.

#define FFLOGO_VERSION "0.1.0"

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/normals.hpp"
#include "fflogo/core/point_cloud.hpp"
#include "fflogo/core/transform.hpp"
#include "fflogo/core/voxel_grid.hpp"
#include "fflogo/eval/benchmark.hpp"
#include "fflogo/eval/metrics.hpp"
#include "fflogo/filter/coarse_align.hpp"
#include "fflogo/filter/correlation.hpp"
#include "fflogo/filter/embedding.hpp"
#include "fflogo/filter/feature_extractor.hpp"
#include "fflogo/io/cloud_io.hpp"
#include "fflogo/io/transform_io.hpp"
#include "fflogo/keyregion/fps.hpp"
#include "fflogo/keyregion/patches.hpp"
#include "fflogo/optim/fusion.hpp"
#include "fflogo/optim/point_to_plane.hpp"
#include "fflogo/pipeline/config.hpp"
#include "fflogo/pipeline/register.hpp"
#include "fflogo/synth/synth.hpp"
