#pragma once

#include <Eigen/Core>

#include "mt3d/core/image.hpp"
#include "mt3d/render/renderer.hpp"
#include "mt3d/scene/asset.hpp"

namespace mt3d {

/// Renders the reference asset with a z-buffer: triangles when the asset has
/// a mesh, otherwise one opaque disc of radius point_footprint per point.
/// Covered pixels get alpha 1 and camera-space depth. Not differentiable.
RenderedImage render_reference(const ReferenceAsset& asset, const CameraPose& camera,
                               const Eigen::Vector3d& background = Eigen::Vector3d::Zero());

/// Min-max normalized depth for conditioning: the nearest foreground pixel maps
/// to 1, the farthest to 0.2, background to 0.
Image normalize_depth(const Image& depth);

}  // namespace mt3d
