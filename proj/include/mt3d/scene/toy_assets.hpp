#pragma once

#include <cstddef>

#include "mt3d/scene/asset.hpp"

namespace mt3d {

/// Unit sphere sampled on a Fibonacci lattice, colored by surface normal.
ReferenceAsset make_sphere_asset(std::size_t points = 20000);

/// Axis-aligned cube surface sampled on a regular grid per face.
ReferenceAsset make_cube_asset(std::size_t points_per_face_side = 56);

/// A head-like sphere with one elongated snout along +x. With two_faced set the
/// snout is mirrored to -x as well, the classic multi-face failure.
ReferenceAsset make_snout_asset(bool two_faced = false, std::size_t points = 20000);

/// Closed triangle mesh of a cube, for the rasterization path.
ReferenceAsset make_cube_mesh_asset();

}  // namespace mt3d
