#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mt3d/scene/gaussian.hpp"
#include "mt3d/scene/ply.hpp"

namespace mt3d {

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3d> colors;  // per vertex, RGB in [0,1]
    std::vector<std::array<int, 3>> triangles;
};

/// The high-fidelity reference object that guides optimization.
///
/// Stored already normalized: the bounding sphere is centered at the origin
/// with unit radius and contains every point (and mesh vertex).
struct ReferenceAsset {
    std::vector<Eigen::Vector3d> points;
    std::vector<Eigen::Vector3d> colors;
    std::optional<TriangleMesh> mesh;
    std::string caption;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
    /// World-space radius of the disc each point covers in point splatting.
    double point_footprint = 0.0;

    /// Normalizes to the unit bounding sphere and derives the point footprint.
    /// Throws InvalidInput when there are no points or colors mismatch.
    static ReferenceAsset create(std::vector<Eigen::Vector3d> points,
                                 std::vector<Eigen::Vector3d> colors, std::string caption,
                                 std::optional<TriangleMesh> mesh = std::nullopt);
};

/// Footprint radius as a multiple of the mean nearest-neighbor spacing.
inline constexpr double kFootprintSpacingFactor = 1.0;

/// Mean distance from each point to its nearest other point (0 for fewer than 2 points).
double mean_nearest_neighbor_distance(const std::vector<Eigen::Vector3d>& points);

/// Farthest-point subsampling. The first pick is the point farthest from the
/// centroid; each next pick maximizes the distance to the picked set. Ties go
/// to the lower index. Returns indices into points.
std::vector<std::size_t> farthest_point_sample(const std::vector<Eigen::Vector3d>& points,
                                               std::size_t n);

inline constexpr double kInitialOpacity = 0.1;

/// n Gaussians on farthest-point picks of the asset, isotropic scale equal to
/// the mean nearest-neighbor distance of the picks, opacity 0.1, point color.
GaussianScene init_from_pointcloud(const ReferenceAsset& asset, std::size_t n);

/// Loads a point cloud (and triangles when the file has faces). Accepts
/// red/green/blue as uchar (0..255) or float (0..1); missing colors become gray.
ReferenceAsset load_reference_asset(const std::filesystem::path& path, std::string caption = {});
void save_reference_asset(const std::filesystem::path& path, const ReferenceAsset& asset,
                          PlyFormat format = PlyFormat::kBinaryLittleEndian);

/// Gaussian scenes use double properties x,y,z, red,green,blue, opacity (logit),
/// scale_0..2 (log), rot_0..3 (w,x,y,z, unnormalized).
PlyData gaussian_scene_to_ply(const GaussianScene& scene,
                              PlyFormat format = PlyFormat::kBinaryLittleEndian);
GaussianScene gaussian_scene_from_ply(const PlyData& ply);
void save_gaussian_scene(const std::filesystem::path& path, const GaussianScene& scene,
                         PlyFormat format = PlyFormat::kBinaryLittleEndian);
GaussianScene load_gaussian_scene(const std::filesystem::path& path);

}  // namespace mt3d
