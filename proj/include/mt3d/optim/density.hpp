#pragma once

#include <cstddef>
#include <vector>

#include "mt3d/scene/gaussian.hpp"

namespace mt3d {

class Rng;

/// Provenance of every Gaussian after a density-control event: the index it
/// had before the event, or -1 for a newly created Gaussian.
using Provenance = std::vector<long>;

/// Replaces every Gaussian whose mean view-space gradient exceeds threshold by
/// two children whose means are drawn from the parent density, with scales
/// divided by scale_divisor; the children take the parent's slot in order.
/// Resets the accumulators.
Provenance densify_split(GaussianScene& scene, double threshold, Rng& rng, double scale_divisor = 1.6);

/// For every Gaussian and its k nearest neighbors (each pair once), inserts an
/// isotropic Gaussian in the middle of the gap when the center distance exceeds
/// the sum of mean scales. Its radius is half the gap; opacity and color are the
/// pair averages. New Gaussians are appended.
Provenance densify_compact(GaussianScene& scene, int neighbors = 3);

/// Removes Gaussians with opacity below min_opacity or mean scale above
/// max_radius. When fewer than min_survivors would remain, the removed
/// Gaussians with the highest opacity are kept until the floor is met.
Provenance prune(GaussianScene& scene, double min_opacity = 0.05, double max_radius = 0.05,
                 std::size_t min_survivors = 16);

}  // namespace mt3d
